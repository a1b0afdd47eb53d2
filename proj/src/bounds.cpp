#include "plcert/bounds.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <optional>
#include <sstream>

#include "plcert/errors.hpp"

namespace plcert {
namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

// Exact rational value of a finite double.
cpp_rational exact(double x) {
  if (x == 0.0) return cpp_rational(0);
  int exp = 0;
  const double frac = std::frexp(x, &exp);
  cpp_int mant = static_cast<std::int64_t>(std::ldexp(frac, 53));
  exp -= 53;
  if (exp >= 0) return cpp_rational(cpp_int(mant << exp));
  cpp_int den = 1;
  den <<= -exp;
  return cpp_rational(mant, den);
}

std::uint64_t floor_nonneg(const cpp_rational& r) {
  if (r <= 0) return 0;
  const cpp_int q = boost::multiprecision::numerator(r) / boost::multiprecision::denominator(r);
  return q.convert_to<std::uint64_t>();
}

// floor(dt/(1+dt) * N) exactly; 0 allowed.
std::uint64_t split_count(std::uint64_t total, double delta_tilde) {
  const cpp_rational dt = exact(delta_tilde);
  return floor_nonneg(dt * cpp_rational(cpp_int(total)) / (1 + dt));
}

void check_unit_open(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) {
    std::ostringstream os;
    os << name << " must lie in (0,1), got " << v;
    throw PreconditionError(os.str());
  }
}

void check_gamma(double gamma, double delta_tilde) {
  if (!(gamma >= 0.0)) {
    std::ostringstream os;
    os << "risk gamma must be >= 0, got " << gamma;
    throw PreconditionError(os.str());
  }
  const double thr = feasibility_threshold(delta_tilde);
  if (gamma >= thr) {
    std::ostringstream os;
    os << "risk gamma=" << gamma << " is not below delta_tilde/(1+delta_tilde)=" << thr
       << "; no admissible randomized subset exists";
    throw InfeasibleError(os.str(), thr);
  }
}

// Threshold value, or nullopt where the bracket is undefined.
std::optional<double> threshold_or_none(const ProblemSpec& spec, const ConvergenceSpec& conv,
                                        double e_d_star) {
  const double upper = e_d_star + conv.c2();
  if (!(upper < 1.0)) return std::nullopt;
  const double dt = spec.delta_tilde();
  const double q = upper / (1.0 - upper);
  if (!(q < dt)) return std::nullopt;
  // sqrt(a) - sqrt(b) written as (a - b)/(sqrt(a) + sqrt(b)) to avoid cancellation.
  const double a = (dt + 1.0) / (dt - q);
  const double b = (dt + 1.0) / dt;
  const double diff = (dt + 1.0) * q / (dt * (dt - q));
  const double bracket = diff / (std::sqrt(a) + std::sqrt(b));
  const double lead = 4.0 * spec.k() / (conv.p() * conv.c1());
  return lead * lead * bracket * bracket * spec.log_term();
}

}  // namespace

ProblemSpec::ProblemSpec(int k, double delta, double epsilon, double delta_tilde)
    : k_(k), delta_(delta), epsilon_(epsilon), delta_tilde_(delta_tilde) {
  if (k < 2) throw PreconditionError("class count k must be >= 2, got " + std::to_string(k));
  check_unit_open(delta, "delta");
  check_unit_open(delta_tilde, "delta_tilde");
  const double cap = 1.0 - 1.0 / k;
  if (!(epsilon >= 0.0 && epsilon < cap)) {
    std::ostringstream os;
    os << "epsilon must lie in [0, 1 - 1/k) = [0, " << cap << "), got " << epsilon;
    throw PreconditionError(os.str());
  }
}

double ProblemSpec::log_term() const noexcept { return std::log(4.0 / delta_); }

void EmpiricalErrors::validate() const {
  if (!(e_clean >= 0.0 && e_clean <= 1.0) || !(e_random >= 0.0 && e_random <= 1.0)) {
    std::ostringstream os;
    os << "empirical errors must lie in [0,1], got e_clean=" << e_clean
       << " e_random=" << e_random;
    throw PreconditionError(os.str());
  }
}

SplitSpec::SplitSpec(std::uint64_t m, std::uint64_t n) : m_(m), n_(n) {
  if (m == 0 || n == 0) {
    throw PreconditionError("split needs m >= 1 and n >= 1, got m=" + std::to_string(m) +
                            " n=" + std::to_string(n));
  }
}

bool SplitSpec::ratio_at_most(double x) const {
  if (std::isnan(x)) return false;
  if (std::isinf(x)) return x > 0;
  return cpp_rational(cpp_int(m_), cpp_int(n_)) <= exact(x);
}

std::string_view to_string(BoundFormula f) {
  switch (f) {
    case BoundFormula::full_constant: return "full_constant";
    case BoundFormula::relaxed: return "relaxed";
  }
  return "unknown";
}

double random_term(int k, double e_random) {
  const double zero_at = static_cast<double>(k - 1) / k;
  return -static_cast<double>(k) * (e_random - zero_at);
}

BoundReport ratt_bound_full(const ProblemSpec& spec, const SplitSpec& split,
                            const EmpiricalErrors& err) {
  err.validate();
  const double k = spec.k();
  const double m = static_cast<double>(split.m());
  const double n = static_cast<double>(split.n());
  BoundReport r;
  r.formula = BoundFormula::full_constant;
  r.constant_used = 2.0 * k + std::sqrt(k) + m / (n * std::sqrt(k));
  r.term_clean = err.e_clean;
  r.term_random = random_term(spec.k(), err.e_random);
  r.term_concentration = r.constant_used * std::sqrt(spec.log_term() / (2.0 * m));
  r.total = r.term_clean + r.term_random + r.term_concentration;
  return r;
}

BoundReport ratt_bound_relaxed(const ProblemSpec& spec, const SplitSpec& split,
                               const EmpiricalErrors& err) {
  if (!split.ratio_below_one()) {
    throw PreconditionError("relaxed bound requires m/n < 1, got m=" +
                            std::to_string(split.m()) + " n=" + std::to_string(split.n()));
  }
  err.validate();
  BoundReport r;
  r.formula = BoundFormula::relaxed;
  r.constant_used = 4.0 * spec.k();
  r.term_clean = err.e_clean;
  r.term_random = random_term(spec.k(), err.e_random);
  r.term_concentration =
      r.constant_used * std::sqrt(spec.log_term() / static_cast<double>(split.m()));
  r.total = r.term_clean + r.term_random + r.term_concentration;
  return r;
}

SplitSpec optimal_split(std::uint64_t total, double delta_tilde) {
  check_unit_open(delta_tilde, "delta_tilde");
  if (total == 0) throw PreconditionError("total example count must be >= 1");
  const std::uint64_t m = split_count(total, delta_tilde);
  if (m == 0) {
    throw PreconditionError("too few examples for a randomized subset: N=" +
                            std::to_string(total));
  }
  return SplitSpec(m, total - m);
}

double feasibility_threshold(double delta_tilde) { return delta_tilde / (1.0 + delta_tilde); }

double supervised_ceiling(const ProblemSpec& spec, double total) {
  if (!(total > 0.0)) throw PreconditionError("labeled count N must be positive");
  const double k = spec.k();
  const double dt = spec.delta_tilde();
  return (k + 1.0) * spec.epsilon() +
         4.0 * k * std::sqrt(spec.log_term()) / std::sqrt(dt / (1.0 + dt) * total);
}

std::uint64_t max_randomized_count(std::uint64_t total, double gamma, double delta_tilde) {
  check_unit_open(delta_tilde, "delta_tilde");
  check_gamma(gamma, delta_tilde);
  const cpp_rational dt = exact(delta_tilde);
  const cpp_rational g = exact(gamma);
  const cpp_rational frac = (dt * (1 - g) - g) / ((1 + dt) * (1 - g));
  return floor_nonneg(frac * cpp_rational(cpp_int(total)));
}

double bound_map(const ProblemSpec& spec, double total, double gamma) {
  if (!(total > 0.0)) throw PreconditionError("unlabeled count N must be positive");
  const double dt = spec.delta_tilde();
  check_gamma(gamma, dt);
  const double denom = dt * (1.0 - gamma) - gamma;
  if (!(denom > 0.0)) {
    throw InfeasibleError("delta_tilde(1-gamma) - gamma vanishes at gamma=" + std::to_string(gamma),
                          feasibility_threshold(dt));
  }
  const double k = spec.k();
  return (k + 1.0) * spec.epsilon() + 4.0 * k * std::sqrt(spec.log_term()) *
                                          std::sqrt((1.0 + dt) * (1.0 - gamma) / denom) /
                                          std::sqrt(total);
}

BoundIteration iterate_bound_map(const ProblemSpec& spec, double total, double gamma0,
                                 int steps) {
  if (steps < 0) throw PreconditionError("steps must be >= 0");
  const double thr = feasibility_threshold(spec.delta_tilde());
  // Validates gamma0 (throws when infeasible).
  (void)bound_map(spec, total, gamma0);

  BoundIteration out;
  out.values.reserve(static_cast<std::size_t>(steps) + 1);
  out.values.push_back(gamma0);
  for (int i = 0; i < steps; ++i) {
    const double next = bound_map(spec, total, out.values.back());
    if (next > 1.0 || next >= thr) {
      out.diverged = true;
      out.escaped_value = next;
      break;
    }
    out.values.push_back(next);
  }
  return out;
}

std::vector<double> convergence_ratios(const std::vector<double>& bounds, double e_d_star) {
  if (bounds.size() < 2) throw PreconditionError("need at least two bound values");
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (!(bounds[i] > e_d_star)) {
      std::ostringstream os;
      os << "bound[" << i << "]=" << bounds[i] << " is not above E_D*=" << e_d_star
         << "; ratio undefined";
      throw PreconditionError(os.str());
    }
  }
  std::vector<double> out;
  out.reserve(bounds.size() - 1);
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    out.push_back((bounds[i + 1] - e_d_star) / (bounds[i] - e_d_star));
  }
  return out;
}

ConvergenceSpec::ConvergenceSpec(double p, double c1, double c2) : p_(p), c1_(c1), c2_(c2) {
  check_unit_open(p, "p");
  if (!(c1 > 0.0 && c1 < c2 && c2 < 1.0)) {
    std::ostringstream os;
    os << "band offsets need 0 < c1 < c2 < 1, got c1=" << c1 << " c2=" << c2;
    throw PreconditionError(os.str());
  }
}

double unlabeled_threshold(const ProblemSpec& spec, const ConvergenceSpec& conv,
                           double e_d_star) {
  if (!(e_d_star >= 0.0)) throw PreconditionError("E_D* must be >= 0");
  const double upper = e_d_star + conv.c2();
  if (!(upper < 1.0)) {
    std::ostringstream os;
    os << "E_D* + c2 = " << upper << " must be < 1";
    throw InfeasibleError(os.str(), 1.0 - conv.c2());
  }
  const auto value = threshold_or_none(spec, conv, e_d_star);
  if (!value) {
    const double thr = feasibility_threshold(spec.delta_tilde());
    std::ostringstream os;
    os << "delta_tilde - (E_D*+c2)/(1-E_D*-c2) must be > 0, i.e. E_D* + c2 = " << upper
       << " must be below delta_tilde/(1+delta_tilde) = " << thr;
    throw InfeasibleError(os.str(), thr);
  }
  return *value;
}

std::uint64_t min_unlabeled_for_rate(const ProblemSpec& spec, const ConvergenceSpec& conv,
                                     double e_d_star) {
  const double t = std::ceil(unlabeled_threshold(spec, conv, e_d_star));
  if (!(t < 1.8e19)) throw InfeasibleError("threshold exceeds the 64-bit count range", t);
  return static_cast<std::uint64_t>(t);
}

std::uint64_t min_unlabeled_self_consistent(const ProblemSpec& spec,
                                            const ConvergenceSpec& conv, std::uint64_t cap) {
  // Satisfied(N) is monotone: E_D*(N) falls with N, so the threshold falls too.
  auto satisfied = [&](std::uint64_t n) {
    if (n == 0 || split_count(n, spec.delta_tilde()) == 0) return false;
    const double n_real = static_cast<double>(n);
    const auto t = threshold_or_none(spec, conv, supervised_ceiling(spec, n_real));
    return t && n_real >= *t;
  };
  if (!satisfied(cap)) {
    throw InfeasibleError("no unlabeled count up to " + std::to_string(cap) +
                              " satisfies the rate condition",
                          static_cast<double>(cap));
  }
  std::uint64_t lo = 0;  // unsatisfied
  std::uint64_t hi = cap;
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (satisfied(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace plcert
