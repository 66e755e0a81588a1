#pragma once

#include <cmath>
#include <stdexcept>

#include "calamp/field.hpp"

namespace calamp {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// N(x; mean, var) for the real field, variance convention E(x-mean)^2 = var.
inline double gauss_pdf(double x, double mean, double var) {
  if (!(var > 0.0)) throw std::domain_error("gauss_pdf: variance must be positive");
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(kTwoPi * var);
}

inline double log_gauss_pdf(double x, double mean, double var) {
  if (!(var > 0.0)) throw std::domain_error("log_gauss_pdf: variance must be positive");
  const double d = x - mean;
  return -0.5 * d * d / var - 0.5 * std::log(kTwoPi * var);
}

// Circularly symmetric complex Gaussian, total variance E|x-mean|^2 = var.
inline double gauss_pdf(const std::complex<double>& x, const std::complex<double>& mean,
                        double var) {
  if (!(var > 0.0)) throw std::domain_error("gauss_pdf: variance must be positive");
  const double d2 = std::norm(x - mean);
  return std::exp(-d2 / var) / (0.5 * kTwoPi * var);
}

inline double log_gauss_pdf(const std::complex<double>& x, const std::complex<double>& mean,
                            double var) {
  if (!(var > 0.0)) throw std::domain_error("log_gauss_pdf: variance must be positive");
  return -std::norm(x - mean) / var - std::log(0.5 * kTwoPi * var);
}

// Standard normal CDF.
inline double gauss_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace calamp
