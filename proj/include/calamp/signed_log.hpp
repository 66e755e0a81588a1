#pragma once

#include <cmath>
#include <limits>

namespace calamp {

// A real number stored as sign and log magnitude, so sums of terms spanning
// hundreds of orders of magnitude can be accumulated without overflow or
// underflow. sign == 0 encodes exact zero (log_mag is then -inf).
struct SignedLog {
  double log_mag = -std::numeric_limits<double>::infinity();
  int sign = 0;

  static SignedLog zero() { return {}; }

  static SignedLog from_value(double v) {
    if (v == 0.0) return {};
    return {std::log(std::fabs(v)), v > 0.0 ? 1 : -1};
  }

  static SignedLog from_log(double log_mag, int sign) {
    if (sign == 0 || (std::isinf(log_mag) && log_mag < 0.0)) return {};
    return {log_mag, sign};
  }

  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_mag); }
  bool is_zero() const { return sign == 0; }

  SignedLog operator*(const SignedLog& o) const {
    if (sign == 0 || o.sign == 0) return {};
    return {log_mag + o.log_mag, sign * o.sign};
  }

  SignedLog operator/(const SignedLog& o) const {
    return {log_mag - o.log_mag, sign * o.sign};
  }

  SignedLog operator+(const SignedLog& o) const {
    if (sign == 0) return o;
    if (o.sign == 0) return *this;
    const SignedLog& big = log_mag >= o.log_mag ? *this : o;
    const SignedLog& small = log_mag >= o.log_mag ? o : *this;
    const double d = small.log_mag - big.log_mag;  // <= 0
    if (big.sign == small.sign) {
      return {big.log_mag + std::log1p(std::exp(d)), big.sign};
    }
    const double one_minus = -std::expm1(d);
    if (one_minus <= 0.0) return {};  // exact cancellation at this precision
    return {big.log_mag + std::log(one_minus), big.sign};
  }

  SignedLog operator-() const { return {log_mag, -sign}; }
  SignedLog operator-(const SignedLog& o) const { return *this + (-o); }
};

}  // namespace calamp
