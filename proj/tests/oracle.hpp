#pragma once

// Independent 50-digit reference implementations of the closed-form bounds.
// These deliberately share no code with the library and evaluate each formula
// in its textbook form.

#include <cmath>
#include <cstdint>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace oracle {

using Real = boost::multiprecision::cpp_dec_float_50;

inline Real R(double x) { return Real(x); }

inline Real full_bound(int k, std::uint64_t m, std::uint64_t n, double delta, double ec,
                       double er) {
  const Real kk = k;
  const Real c = 2 * kk + sqrt(kk) + Real(m) / (Real(n) * sqrt(kk));
  return R(ec) + (kk - 1) * (1 - kk / (kk - 1) * R(er)) +
         c * sqrt(log(4 / R(delta)) / (2 * Real(m)));
}

inline Real relaxed_bound(int k, std::uint64_t m, double delta, double ec, double er) {
  const Real kk = k;
  return R(ec) + (kk - 1) * (1 - kk / (kk - 1) * R(er)) + 4 * kk * sqrt(log(4 / R(delta)) / Real(m));
}

inline Real supervised_ceiling(int k, double delta, double eps, double dt, double n) {
  const Real kk = k;
  const Real d = R(dt);
  return (kk + 1) * R(eps) + 4 * kk * sqrt(log(4 / R(delta))) / sqrt(d / (1 + d) * R(n));
}

inline std::uint64_t max_randomized_count(std::uint64_t n, double gamma, double dt) {
  // Exact rational evaluation: every double is a dyadic rational, so scale by
  // a common power of two and floor an integer quotient.
  using boost::multiprecision::cpp_int;
  const cpp_int scale = cpp_int(1) << 1100;
  auto to_int = [&](double x) {
    int e = 0;
    const double mant = std::frexp(x, &e);
    const auto num = static_cast<std::int64_t>(std::ldexp(mant, 53));
    cpp_int v = cpp_int(num) * scale;
    const int shift = e - 53;
    return shift >= 0 ? cpp_int(v << shift) : cpp_int(v >> -shift);
  };
  const cpp_int g = to_int(gamma);
  const cpp_int d = to_int(dt);
  const cpp_int one = scale;
  const cpp_int num = (d * (one - g) - g * one) * cpp_int(n);
  const cpp_int den = (one + d) * (one - g);
  if (num <= 0) return 0;
  return static_cast<std::uint64_t>(num / den);
}

inline Real bound_map(int k, double delta, double eps, double dt, double n, double gamma) {
  const Real kk = k;
  const Real d = R(dt);
  const Real g = R(gamma);
  return (kk + 1) * R(eps) +
         4 * kk * sqrt(log(4 / R(delta))) * sqrt((1 + d) * (1 - g) / (d * (1 - g) - g)) /
             sqrt(R(n));
}

inline Real unlabeled_threshold(int k, double delta, double dt, double p, double c1, double c2,
                                double e_star) {
  const Real kk = k;
  const Real d = R(dt);
  const Real s = R(e_star) + R(c2);
  const Real q = s / (1 - s);
  const Real diff = sqrt((d + 1) / (d - q)) - sqrt((d + 1) / d);
  const Real lead = 4 * kk / (R(p) * R(c1));
  return lead * lead * diff * diff * log(4 / R(delta));
}

inline double rel_err(double got, const Real& want) {
  const Real w = abs(want);
  const Real diff = abs(Real(got) - want);
  return static_cast<double>(w == 0 ? diff : diff / w);
}

}  // namespace oracle
