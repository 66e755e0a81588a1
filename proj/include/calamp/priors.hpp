#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "calamp/field.hpp"
#include "calamp/gauss.hpp"
#include "calamp/rng.hpp"
#include "calamp/truncated_moments.hpp"

namespace calamp {

template <class T>
struct PosteriorMoments {
  T mean;
  double variance;
};

// Bernoulli-Gauss signal prior: zero with probability 1 - rho, otherwise
// Gaussian (real) or circular complex Gaussian with variance sigma2. Prior
// mean is 0 and prior variance rho * sigma2.
struct BernoulliGaussPrior {
  double rho = 0.5;
  double sigma2 = 1.0;

  BernoulliGaussPrior() = default;
  BernoulliGaussPrior(double rho_, double sigma2_) : rho(rho_), sigma2(sigma2_) {
    if (!(rho > 0.0) || rho > 1.0)
      throw std::domain_error("BernoulliGaussPrior: rho must be in (0, 1]");
    if (!(sigma2 > 0.0)) throw std::domain_error("BernoulliGaussPrior: sigma2 must be positive");
  }

  double prior_variance() const { return rho * sigma2; }

  // Posterior mean and variance of one component given the Gaussian
  // pseudo-observation (r_hat, r_var). Evaluated through the posterior
  // occupancy q = P(nonzero | r_hat) so both tails stay finite:
  //   x_hat = q m,  x_var = q w + q (1 - q) |m|^2,
  // with (m, w) the moments of the Gaussian-times-Gaussian product.
  template <class T>
  PosteriorMoments<T> update(const T& r_hat, double r_var) const {
    if (!(r_var > 0.0)) throw std::domain_error("BernoulliGaussPrior: r_var must be positive");
    const double shrink = sigma2 / (r_var + sigma2);
    const T m = r_hat * shrink;
    const double w = r_var * shrink;
    double q = 1.0;
    if (rho < 1.0) {
      // log N(r;0,r_var) - log N(r;0,r_var+sigma2), complex densities for
      // complex fields.
      const double a2 = abs2(r_hat);
      const double coeff = FieldTraits<T>::is_complex ? 1.0 : 0.5;
      const double log_ratio = coeff * (std::log((r_var + sigma2) / r_var) -
                                        a2 * (1.0 / r_var - 1.0 / (r_var + sigma2)));
      const double t = std::log((1.0 - rho) / rho) + log_ratio;
      q = t > 0.0 ? std::exp(-t) / (1.0 + std::exp(-t)) : 1.0 / (1.0 + std::exp(t));
    }
    PosteriorMoments<T> out;
    out.mean = m * q;
    out.variance = q * w + q * (1.0 - q) * abs2(m);
    return out;
  }

  template <class T>
  T sample(Rng& rng) const;
};

template <>
inline double BernoulliGaussPrior::sample<double>(Rng& rng) const {
  return rng.next_double() < rho ? rng.next_gauss(0.0, sigma2) : 0.0;
}

template <>
inline std::complex<double> BernoulliGaussPrior::sample<std::complex<double>>(Rng& rng) const {
  // Fixed draw count per component keeps substreams aligned.
  const double u = rng.next_double();
  const std::complex<double> g = rng.next_complex_gauss(sigma2);
  return u < rho ? g : std::complex<double>(0.0, 0.0);
}

struct GainMoments {
  double mean = 0.0;
  double variance = 0.0;
  bool zero_evidence = false;
};

// Uniform gain prior centered at 1 with width `width`. The solver-side
// update inflates the width by `inflation`; generation uses the nominal
// width. The posterior update carries the sample-count weight d^p.
struct UniformGainPrior {
  double width = 1.0;
  double inflation = 1.1;

  UniformGainPrior() = default;
  UniformGainPrior(double width_, double inflation_ = 1.1)
      : width(width_), inflation(inflation_) {
    if (!(width > 0.0) || !(width < 2.0))
      throw std::domain_error("UniformGainPrior: width must be in (0, 2)");
    if (!(inflation >= 1.0)) throw std::domain_error("UniformGainPrior: inflation must be >= 1");
    if (!(lo() > 0.0))
      throw std::domain_error("UniformGainPrior: inflated support must stay positive");
  }

  double lo() const { return 1.0 - 0.5 * width * inflation; }
  double hi() const { return 1.0 + 0.5 * width * inflation; }
  double prior_mean() const { return 1.0; }
  double prior_variance() const {
    const double w = width * inflation;
    return w * w / 12.0;
  }

  // Moments of d under weight d^p restricted to the inflated support against
  // Gaussian(d_mean, d_var). Underflow of the evidence falls back to the
  // prior moments.
  GainMoments update(double d_mean, double d_var, int p) const {
    if (!(d_var > 0.0)) throw std::domain_error("UniformGainPrior: d_var must be positive");
    if (p < 0) throw std::domain_error("UniformGainPrior: p must be nonnegative");
    const TruncatedPowerMoments m = truncated_power_gauss_moments(p, d_mean, d_var, lo(), hi());
    if (m.zero_evidence) return {prior_mean(), prior_variance(), true};
    GainMoments out;
    out.mean = std::clamp(m.mean, lo(), hi());
    out.variance = m.variance;
    return out;
  }

  double sample(Rng& rng) const { return 1.0 + width * (rng.next_double() - 0.5); }
};

// Known calibration: point mass at `value`.
struct PointMassGainPrior {
  double value = 1.0;

  GainMoments update(double, double, int) const { return {value, 0.0, false}; }
  double prior_mean() const { return value; }
  double prior_variance() const { return 0.0; }
  double sample(Rng&) const { return value; }
};

struct ComplexGainMoments {
  std::complex<double> mean{0.0, 0.0};
  double variance = 0.0;
  bool degenerate_phase = false;
};

// Zero-mean circular complex normal gain prior. The posterior update keeps
// the phase of the pseudo-observation and moves only the modulus through the
// d^p-weighted half-line moments; the returned variance is the input
// variance. This update is deliberately cheap rather than exact; `variance`
// matters only for sample generation.
struct ComplexNormalGainPrior {
  double variance = 10.0;

  ComplexNormalGainPrior() = default;
  explicit ComplexNormalGainPrior(double variance_) : variance(variance_) {
    if (!(variance > 0.0))
      throw std::domain_error("ComplexNormalGainPrior: variance must be positive");
  }

  std::complex<double> prior_mean() const { return {0.0, 0.0}; }
  double prior_variance() const { return variance; }

  ComplexGainMoments update(const std::complex<double>& d_mean, double d_var, int p) const {
    if (!(d_var > 0.0)) throw std::domain_error("ComplexNormalGainPrior: d_var must be positive");
    const double r = std::abs(d_mean);
    if (r == 0.0) return {{0.0, 0.0}, d_var, true};
    const SignedLog i0 = power_gauss_integral(
        p, r, d_var, 0.0, std::numeric_limits<double>::infinity());
    if (i0.is_zero()) return {{0.0, 0.0}, d_var, true};
    const SignedLog i1 = power_gauss_integral(
        p + 1, r, d_var, 0.0, std::numeric_limits<double>::infinity());
    ComplexGainMoments out;
    out.mean = d_mean / r * (i1 / i0).value();
    out.variance = d_var;
    return out;
  }

  std::complex<double> sample(Rng& rng) const { return rng.next_complex_gauss(variance); }
};

}  // namespace calamp
