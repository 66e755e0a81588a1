#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "calamp/field.hpp"
#include "calamp/gauss.hpp"
#include "calamp/priors.hpp"
#include "calamp/quadrature.hpp"

namespace calamp {

// Additive-noise variances below this are treated as this; exact zero noise
// makes the iteration diverge occasionally.
inline constexpr double kDeltaFloor = 1e-15;

template <class T>
struct ChannelSample {
  T z_hat;
  double z_var = 0.0;
  bool zero_evidence = false;
};

template <class T>
struct GainChannelSample {
  T z_hat;
  double z_var = 0.0;
  T d_hat;
  double d_var = 0.0;
  bool zero_evidence = false;
};

// Channel inputs are P-vectors ordered so that entry 0 belongs to the sample
// being updated (current iteration) and entries 1..P-1 to the remaining
// samples (previous iteration). The outputs depend on entries 1..P-1 only
// through symmetric sums, so their order is immaterial.

// Two-state sensor: with probability epsilon the reading is pure noise
// N(noise_mean, noise_var) regardless of z, otherwise y = z exactly.
// Real field only. Products of per-sample densities are formed in the log
// domain; the mixture weight is a logistic in the log-likelihood gap, so no
// underflow is possible.
struct FaultyChannel {
  double epsilon = 0.1;
  double noise_mean = 0.0;
  double noise_var = 0.2;

  FaultyChannel() = default;
  FaultyChannel(double epsilon_, double noise_mean_, double noise_var_)
      : epsilon(epsilon_), noise_mean(noise_mean_), noise_var(noise_var_) {
    if (epsilon < 0.0 || epsilon > 1.0)
      throw std::domain_error("FaultyChannel: epsilon must be in [0, 1]");
    if (!(noise_var > 0.0)) throw std::domain_error("FaultyChannel: noise_var must be positive");
  }

  ChannelSample<double> sample_moments(std::span<const double> z_mean,
                                       std::span<const double> z_var,
                                       std::span<const double> y, int /*sensor*/ = 0) const {
    const double zm = z_mean[0];
    const double zv = z_var[0];
    const double y0 = y[0];
    double p_fault;
    if (epsilon <= 0.0) {
      p_fault = 0.0;
    } else if (epsilon >= 1.0) {
      p_fault = 1.0;
    } else {
      double log_fault = 0.0, log_work = 0.0;
      for (std::size_t m = 0; m < z_mean.size(); ++m) {
        log_fault += log_gauss_pdf(y[m], noise_mean, noise_var);
        log_work += log_gauss_pdf(y[m], z_mean[m], z_var[m]);
      }
      const double t = std::log(epsilon / (1.0 - epsilon)) + log_fault - log_work;
      p_fault = t > 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
    }
    ChannelSample<double> out;
    out.z_hat = p_fault * zm + (1.0 - p_fault) * y0;
    // Mixture second moment minus |z_hat|^2, rearranged to stay nonnegative.
    out.z_var = p_fault * zv + p_fault * (1.0 - p_fault) * (zm - y0) * (zm - y0);
    return out;
  }
};

// Gain channel: y = (z + w) / d with w ~ N(0, delta) and per-sensor gain d
// shared across samples. Given the effective Gaussian belief on d the sample
// posterior is
//   z_hat = (delta z_mean + z_var y d_hat) / (delta + z_var),
//   z_var = delta z_var / (delta + z_var) + (z_var/(delta+z_var))^2 |y|^2 d_var,
// and the d belief collects all samples of the row:
//   d_prec = sum_m |y_m|^2 / (delta + z_var_m),
//   d_mean = (sum_m z_mean_m conj(y_m) / (delta + z_var_m)) / d_prec,
// passed through the prior update with weight |d|^P.
template <class T, class Prior>
struct GainChannel {
  double delta = kDeltaFloor;
  Prior prior;

  GainChannel() = default;
  GainChannel(double delta_, Prior prior_) : delta(std::max(delta_, kDeltaFloor)), prior(prior_) {
    if (delta_ < 0.0) throw std::domain_error("GainChannel: delta must be nonnegative");
  }

  GainChannelSample<T> sample_moments(std::span<const T> z_mean, std::span<const double> z_var,
                                      std::span<const T> y, int /*sensor*/ = 0) const {
    const int p = static_cast<int>(z_mean.size());
    double prec = 0.0;
    T acc = T(0);
    for (int m = 0; m < p; ++m) {
      const double denom = delta + z_var[m];
      prec += abs2(y[m]) / denom;
      acc += z_mean[m] * FieldTraits<T>::conj(y[m]) / denom;
    }
    GainChannelSample<T> out;
    if (prec > 0.0 && std::isfinite(prec)) {
      const auto d = prior.update(T(acc / prec), 1.0 / prec, p);
      out.d_hat = T(d.mean);
      out.d_var = d.variance;
      out.zero_evidence = gain_update_failed(d);
    } else {
      out.d_hat = T(prior.prior_mean());
      out.d_var = prior.prior_variance();
      out.zero_evidence = true;
    }
    const double denom0 = delta + z_var[0];
    const double pull = z_var[0] / denom0;
    out.z_hat = (z_mean[0] * delta + y[0] * (z_var[0] * out.d_hat)) / denom0;
    out.z_var = delta * pull + pull * pull * abs2(y[0]) * out.d_var;
    return out;
  }

 private:
  static bool gain_update_failed(const GainMoments& m) { return m.zero_evidence; }
  static bool gain_update_failed(const ComplexGainMoments& m) { return m.degenerate_phase; }
};

using RealGainChannel = GainChannel<double, UniformGainPrior>;
using ComplexGainChannel = GainChannel<std::complex<double>, ComplexNormalGainPrior>;

// Perfectly calibrated sensors: the gain channel with d pinned per sensor.
template <class T>
struct CalibratedChannel {
  double delta = kDeltaFloor;
  std::vector<T> gains;  // one per sensor

  CalibratedChannel() = default;
  CalibratedChannel(double delta_, std::vector<T> gains_)
      : delta(std::max(delta_, kDeltaFloor)), gains(std::move(gains_)) {
    if (delta_ < 0.0) throw std::domain_error("CalibratedChannel: delta must be nonnegative");
  }

  ChannelSample<T> sample_moments(std::span<const T> z_mean, std::span<const double> z_var,
                                  std::span<const T> y, int sensor) const {
    const T d = gains.at(sensor);
    const double denom = delta + z_var[0];
    const double pull = z_var[0] / denom;
    ChannelSample<T> out;
    out.z_hat = (z_mean[0] * delta + y[0] * (z_var[0] * d)) / denom;
    out.z_var = delta * pull;
    return out;
  }
};

// GAMP parameterization of the channel output step and its inverse.
template <class T>
std::pair<T, double> gamp_gout(const T& z_hat, const T& p_hat, double z_var, double p_var) {
  if (!(p_var > 0.0)) throw std::domain_error("gamp_gout: p_var must be positive");
  return {(z_hat - p_hat) / p_var, (z_var - p_var) / (p_var * p_var)};
}

template <class T>
std::pair<T, double> gamp_gout_inverse(const T& g_out, const T& p_hat, double g_out_prime,
                                       double p_var) {
  return {p_hat + g_out * p_var, p_var + g_out_prime * p_var * p_var};
}

// Fully generic channel for user-supplied separable p(y|z,d) with scalar real
// d: evaluates the row moments by nested adaptive quadrature (outer over d,
// inner over each sample's z). Costs roughly 10^5 likelihood evaluations per
// sample and is meant for prototyping new sensing models and as an oracle;
// production channels specialize the integrals analytically.
struct QuadratureChannel {
  std::function<double(double)> log_prior;                        // log p_D(d)
  std::function<double(double, double, double)> log_likelihood;   // log p(y|z,d)
  double d_lo = 0.0;
  double d_hi = 1.0;
  double rel_tol = 1e-10;

  ChannelSample<double> sample_moments(std::span<const double> z_mean,
                                       std::span<const double> z_var,
                                       std::span<const double> y, int /*sensor*/ = 0) const {
    const std::size_t p = z_mean.size();
    struct Inner {
      double log_f0;
      double mean;
      double var;
    };
    auto inner = [&](std::size_t m, double d) -> Inner {
      auto lw = [&](double z) { return log_likelihood(y[m], z, d); };
      const ScaledMoments f = gaussian_weight_moments(lw, z_mean[m], z_var[m],
                                                      -std::numeric_limits<double>::infinity(),
                                                      std::numeric_limits<double>::infinity(),
                                                      rel_tol, 128, 8);
      if (f.zero_evidence) return {-std::numeric_limits<double>::infinity(), 0.0, 0.0};
      return {std::log(f.m0) + f.log_scale, f.mean(), f.variance()};
    };
    // Peak of the outer log integrand over the prior support.
    const int scan = 64;
    double peak = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= scan; ++i) {
      const double d = d_lo + (d_hi - d_lo) * i / scan;
      double l = log_prior(d);
      for (std::size_t m = 0; m < p && std::isfinite(l); ++m) l += inner(m, d).log_f0;
      peak = std::max(peak, l);
    }
    ChannelSample<double> fallback{z_mean[0], z_var[0], true};
    if (!std::isfinite(peak)) return fallback;
    // The three outer integrands share every expensive inner evaluation;
    // memoized per node since each integral adapts independently.
    struct Triple {
      double w, m1, m2;
    };
    std::map<double, Triple> cache;
    auto eval = [&](double d) -> Triple {
      const auto it = cache.find(d);
      if (it != cache.end()) return it->second;
      double l = log_prior(d);
      Inner first{0.0, 0.0, 0.0};
      for (std::size_t m = 0; m < p && std::isfinite(l); ++m) {
        const Inner f = inner(m, d);
        l += f.log_f0;
        if (m == 0) first = f;
      }
      Triple t{0.0, 0.0, 0.0};
      if (std::isfinite(l) && l - peak > -745.0) {
        t.w = std::exp(l - peak);
        t.m1 = t.w * first.mean;
        t.m2 = t.w * (first.var + first.mean * first.mean);
      }
      cache.emplace(d, t);
      return t;
    };
    const double g0 =
        integrate([&](double d) { return eval(d).w; }, d_lo, d_hi, rel_tol, 1e-300, 600, 12);
    if (!(g0 > 0.0) || !std::isfinite(g0)) return fallback;
    const double scale =
        g0 * (1.0 + std::abs(z_mean[0]) + std::abs(y[0]) + std::sqrt(z_var[0]));
    const double g1 = integrate([&](double d) { return eval(d).m1; }, d_lo, d_hi, rel_tol,
                                rel_tol * scale, 600, 12);
    const double g2 = integrate([&](double d) { return eval(d).m2; }, d_lo, d_hi, rel_tol,
                                rel_tol * scale * scale / std::max(g0, 1e-300), 600, 12);
    ChannelSample<double> out;
    out.z_hat = g1 / g0;
    out.z_var = std::max(0.0, g2 / g0 - out.z_hat * out.z_hat);
    return out;
  }
};

}  // namespace calamp
