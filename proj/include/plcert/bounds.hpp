#pragma once

// Closed-form generalization bounds for training on a mixture of clean and
// uniformly randomly labeled data, and the quantities derived from them for
// the pseudo-label iteration: the optimal clean/random split, the supervised
// reference ceiling, the one-step bound map, and the unlabeled-sample
// threshold for a linear convergence rate.
//
// All functions are pure. Logarithms are natural.

#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

namespace plcert {

// Fixed theory parameters shared by every formula.
class ProblemSpec {
 public:
  // Throws PreconditionError unless k >= 2, delta and delta_tilde lie in
  // (0,1), and 0 <= epsilon < 1 - 1/k.
  ProblemSpec(int k, double delta, double epsilon, double delta_tilde);

  int k() const noexcept { return k_; }
  double delta() const noexcept { return delta_; }
  double epsilon() const noexcept { return epsilon_; }
  double delta_tilde() const noexcept { return delta_tilde_; }

  // log(4/delta), the confidence factor inside every concentration term.
  double log_term() const noexcept;

 private:
  int k_;
  double delta_;
  double epsilon_;
  double delta_tilde_;
};

struct EmpiricalErrors {
  double e_clean = 0.0;
  double e_random = 0.0;

  // Throws PreconditionError unless both lie in [0,1].
  void validate() const;
};

// Sizes of the randomly labeled (m) and clean (n) portions. The ratio m/n is
// kept as the integer pair; comparisons against it are exact.
class SplitSpec {
 public:
  SplitSpec(std::uint64_t m, std::uint64_t n);

  std::uint64_t m() const noexcept { return m_; }
  std::uint64_t n() const noexcept { return n_; }

  // Exact m/n <= x, treating the double x as the rational it represents.
  bool ratio_at_most(double x) const;
  bool ratio_below_one() const noexcept { return m_ < n_; }

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;

 private:
  std::uint64_t m_;
  std::uint64_t n_;
};

enum class BoundFormula {
  full_constant,  // constant 2k + sqrt(k) + m/(n sqrt(k)), 1/(2m) inside the root
  relaxed,        // constant 4k, 1/m inside the root; needs m/n < 1
};

std::string_view to_string(BoundFormula f);

struct BoundReport {
  double term_clean = 0.0;
  double term_random = 0.0;
  double term_concentration = 0.0;
  double constant_used = 0.0;
  double total = 0.0;
  BoundFormula formula = BoundFormula::relaxed;

  // A bound above 1 says nothing about a 0-1 risk but is reported unclipped.
  bool vacuous() const noexcept { return total > 1.0; }
};

// E_S + (k-1)(1 - k/(k-1) E_rand) + c sqrt(log(4/delta) / (2m)),
// c = 2k + sqrt(k) + m/(n sqrt(k)).
BoundReport ratt_bound_full(const ProblemSpec& spec, const SplitSpec& split,
                            const EmpiricalErrors& err);

// E_S + (k-1)(1 - k/(k-1) E_rand) + 4k sqrt(log(4/delta) / m).
// Throws PreconditionError when m/n >= 1.
BoundReport ratt_bound_relaxed(const ProblemSpec& spec, const SplitSpec& split,
                               const EmpiricalErrors& err);

// The (k-1)(1 - k/(k-1) e) contribution. Exactly zero at e == (k-1)/k
// (as a double), negative above it.
double random_term(int k, double e_random);

// Largest m with m/(N-m) <= delta_tilde, computed exactly; n = N - m.
// Throws PreconditionError if that m is 0.
SplitSpec optimal_split(std::uint64_t total, double delta_tilde);

// delta_tilde / (1 + delta_tilde): a risk at or above this admits no
// randomized subset.
double feasibility_threshold(double delta_tilde);

// (k+1) eps + 4k sqrt(log(4/delta)) / sqrt(delta_tilde/(1+delta_tilde) N).
double supervised_ceiling(const ProblemSpec& spec, double total);

// floor((delta_tilde(1-gamma) - gamma) / ((1+delta_tilde)(1-gamma)) N),
// evaluated in exact rational arithmetic on the given doubles (never negative).
// Throws InfeasibleError when gamma >= feasibility_threshold(delta_tilde).
std::uint64_t max_randomized_count(std::uint64_t total, double gamma, double delta_tilde);

// One-step risk bound B(gamma) after a pseudo-label round on `total` unlabeled
// examples with the largest admissible randomized subset.
// Throws InfeasibleError for gamma outside [0, feasibility_threshold).
double bound_map(const ProblemSpec& spec, double total, double gamma);

struct BoundIteration {
  std::vector<double> values;  // gamma0, B(gamma0), B(B(gamma0)), ...
  bool diverged = false;       // an iterate left the feasible region or exceeded 1
  double escaped_value = std::numeric_limits<double>::quiet_NaN();
};

// Iterates B `steps` times from gamma0. Stops early, setting `diverged`, when
// an iterate cannot be fed back into B; that iterate is kept in
// `escaped_value` and not appended.
BoundIteration iterate_bound_map(const ProblemSpec& spec, double total, double gamma0,
                                 int steps);

// r_i = (bounds[i+1] - e_d_star) / (bounds[i] - e_d_star).
std::vector<double> convergence_ratios(const std::vector<double>& bounds, double e_d_star);

// Target rate p and the sandwich band [E_D* + c1, E_D* + c2].
class ConvergenceSpec {
 public:
  ConvergenceSpec(double p, double c1, double c2);

  double p() const noexcept { return p_; }
  double c1() const noexcept { return c1_; }
  double c2() const noexcept { return c2_; }

 private:
  double p_;
  double c1_;
  double c2_;
};

// Real-valued right-hand side of the sample-complexity condition:
// (4k/(p c1))^2 [sqrt((dt+1)/(dt - q)) - sqrt((dt+1)/dt)]^2 log(4/delta),
// q = (E_D* + c2)/(1 - E_D* - c2).
// Throws InfeasibleError when E_D* + c2 >= 1 or q >= delta_tilde.
double unlabeled_threshold(const ProblemSpec& spec, const ConvergenceSpec& conv,
                           double e_d_star);

// Ceiling of unlabeled_threshold.
std::uint64_t min_unlabeled_for_rate(const ProblemSpec& spec, const ConvergenceSpec& conv,
                                     double e_d_star);

inline constexpr std::uint64_t kDefaultUnlabeledCap = 1'000'000'000'000'000ULL;

// Smallest N with N >= unlabeled_threshold(spec, conv, supervised_ceiling(spec, N)),
// where N must also admit an optimal split and a defined threshold.
// Throws InfeasibleError if no N up to `cap` qualifies.
std::uint64_t min_unlabeled_self_consistent(const ProblemSpec& spec,
                                            const ConvergenceSpec& conv,
                                            std::uint64_t cap = kDefaultUnlabeledCap);

}  // namespace plcert
