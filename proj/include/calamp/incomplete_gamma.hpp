#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace calamp {

namespace detail {

// log of the regularized lower incomplete gamma P(s,x) via the power series,
// valid and fast for x < s + 1.
inline double log_gamma_p_series(double s, double x) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  double term = 1.0 / s;
  double sum = term;
  double a = s;
  for (int k = 0; k < 500; ++k) {
    a += 1.0;
    term *= x / a;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
  }
  return s * std::log(x) - x - std::lgamma(s) + std::log(sum);
}

// log of the regularized upper incomplete gamma Q(s,x) via Lentz continued
// fraction, valid for x >= s + 1. Stays finite far into the tail where the
// unscaled value underflows.
inline double log_gamma_q_cf(double s, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return s * std::log(x) - x - std::lgamma(s) + std::log(h);
}

}  // namespace detail

// log P(s,x) and log Q(s,x), each computed on the branch where it is
// relatively accurate and completed via log1p on the other branch.
inline double log_gamma_p(double s, double x) {
  if (!(s > 0.0)) throw std::domain_error("log_gamma_p: s must be positive");
  if (x < 0.0) throw std::domain_error("log_gamma_p: x must be nonnegative");
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  if (std::isinf(x)) return 0.0;
  if (x < s + 1.0) return detail::log_gamma_p_series(s, x);
  const double lq = detail::log_gamma_q_cf(s, x);
  return lq > -1e-17 ? std::log(-std::expm1(lq)) : std::log1p(-std::exp(lq));
}

inline double log_gamma_q(double s, double x) {
  if (!(s > 0.0)) throw std::domain_error("log_gamma_q: s must be positive");
  if (x < 0.0) throw std::domain_error("log_gamma_q: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
  if (x >= s + 1.0) return detail::log_gamma_q_cf(s, x);
  const double lp = detail::log_gamma_p_series(s, x);
  return lp > -1e-17 ? std::log(-std::expm1(lp)) : std::log1p(-std::exp(lp));
}

// Unregularized lower incomplete gamma, gamma(s,x) = int_0^x t^{s-1} e^-t dt.
inline double lower_incomplete_gamma(double s, double x) {
  if (!(s > 0.0)) throw std::domain_error("lower_incomplete_gamma: s must be positive");
  if (x < 0.0) throw std::domain_error("lower_incomplete_gamma: x must be nonnegative");
  if (x == 0.0) return 0.0;
  return std::exp(std::lgamma(s) + log_gamma_p(s, x));
}

}  // namespace calamp
