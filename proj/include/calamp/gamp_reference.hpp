#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "calamp/field.hpp"
#include "calamp/gauss.hpp"
#include "calamp/priors.hpp"

namespace calamp {
namespace reference {

// Plain-loop GAMP for a single sample column, written against the update
// equations directly: no shared iteration code with the production solver,
// no Eigen. Used to verify that the P = 1 case of the coupled iteration is
// the same algorithm.

template <class T>
struct GampChannelOut {
  T z_hat;
  double z_var;
};

template <class T>
using GampChannelFn =
    std::function<GampChannelOut<T>(T p_hat, double p_var, T y, int sensor)>;

template <class T>
struct GampTrace {
  std::vector<std::vector<T>> x_hat_per_iter;
};

template <class T>
GampTrace<T> run_gamp(const std::vector<std::vector<T>>& f_rows,  // M rows of length N
                      const std::vector<T>& y, double rho, double sigma2,
                      const GampChannelFn<T>& channel, double beta, int iters,
                      double variance_floor) {
  const std::size_t m = f_rows.size();
  if (m == 0) throw std::invalid_argument("run_gamp: empty system");
  const std::size_t n = f_rows[0].size();

  auto denoise = [&](T r, double v, T* xh, double* xv) {
    const double shrink = sigma2 / (v + sigma2);
    const T loc = r * shrink;
    const double spread = v * shrink;
    double q = 1.0;
    if (rho < 1.0) {
      const double coeff = FieldTraits<T>::is_complex ? 1.0 : 0.5;
      const double log_ratio =
          coeff * (std::log((v + sigma2) / v) - abs2(r) * (1.0 / v - 1.0 / (v + sigma2)));
      const double t = std::log((1.0 - rho) / rho) + log_ratio;
      q = t > 0.0 ? std::exp(-t) / (1.0 + std::exp(-t)) : 1.0 / (1.0 + std::exp(t));
    }
    *xh = loc * q;
    *xv = q * spread + q * (1.0 - q) * abs2(loc);
  };

  std::vector<T> x_hat(n, T(0));
  std::vector<double> x_var(n, rho * sigma2);
  std::vector<T> p_hat(y);
  std::vector<double> p_var(m, 1.0);
  std::vector<T> z_hat(y);
  std::vector<double> z_var(m, 1.0);
  std::vector<T> r_hat(n, T(0));
  std::vector<double> r_var(n, rho * sigma2);

  GampTrace<T> trace;
  for (int t = 0; t < iters; ++t) {
    std::vector<T> p_hat_new(m);
    std::vector<double> p_var_new(m);
    for (std::size_t mu = 0; mu < m; ++mu) {
      double v0 = 0.0;
      T lin = T(0);
      for (std::size_t i = 0; i < n; ++i) {
        v0 += abs2(f_rows[mu][i]) * x_var[i];
        lin += f_rows[mu][i] * x_hat[i];
      }
      v0 = std::max(v0, variance_floor);
      double v = v0;
      if (beta < 1.0) v = 1.0 / (beta / v0 + (1.0 - beta) / (beta * p_var[mu]));
      v = std::max(v, variance_floor);
      const T onsager = (z_hat[mu] - p_hat[mu]) * (v / std::max(p_var[mu], variance_floor));
      const T ph0 = lin - onsager;
      const double beta_eff = beta >= 1.0 ? 1.0 : beta * v / v0;
      p_hat_new[mu] = ph0 * beta_eff + p_hat[mu] * (1.0 - beta_eff);
      p_var_new[mu] = v;
    }
    p_hat = p_hat_new;
    p_var = p_var_new;
    for (std::size_t mu = 0; mu < m; ++mu) {
      const GampChannelOut<T> out = channel(p_hat[mu], p_var[mu], y[mu], static_cast<int>(mu));
      z_hat[mu] = out.z_hat;
      z_var[mu] = std::max(out.z_var, 0.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double prec = 0.0;
      T corr = T(0);
      for (std::size_t mu = 0; mu < m; ++mu) {
        const double pv = p_var[mu];
        prec += abs2(f_rows[mu][i]) * (pv - z_var[mu]) / (pv * pv);
        corr += FieldTraits<T>::conj(f_rows[mu][i]) * (z_hat[mu] - p_hat[mu]) / pv;
      }
      const double rv0 = 1.0 / std::max(prec, variance_floor);
      double rv = rv0;
      if (beta < 1.0) rv = 1.0 / (beta / rv0 + (1.0 - beta) / (beta * r_var[i]));
      rv = std::max(rv, variance_floor);
      const T rh0 = x_hat[i] + corr * rv;
      const double beta_eff = beta >= 1.0 ? 1.0 : beta * rv / rv0;
      r_hat[i] = rh0 * beta_eff + r_hat[i] * (1.0 - beta_eff);
      r_var[i] = rv;
    }
    for (std::size_t i = 0; i < n; ++i) denoise(r_hat[i], r_var[i], &x_hat[i], &x_var[i]);
    trace.x_hat_per_iter.push_back(x_hat);
  }
  return trace;
}

// Marginalized single-sample channels, written out from the defining
// formulas rather than routed through the production row machinery.
inline GampChannelFn<double> calibrated_channel_fn(double delta, std::vector<double> gains) {
  return [delta, gains = std::move(gains)](double ph, double pv, double y,
                                           int mu) -> GampChannelOut<double> {
    const double d = gains[static_cast<std::size_t>(mu)];
    const double denom = delta + pv;
    return {(delta * ph + pv * y * d) / denom, delta * pv / denom};
  };
}

inline GampChannelFn<double> faulty_channel_fn(double epsilon, double noise_mean,
                                               double noise_var) {
  return [=](double ph, double pv, double y, int) -> GampChannelOut<double> {
    const double w_fault = epsilon * gauss_pdf(y, noise_mean, noise_var);
    const double w_work = (1.0 - epsilon) * gauss_pdf(y, ph, pv);
    const double z0 = w_fault + w_work;
    if (!(z0 > 0.0)) {
      // Both branches underflowed; keep the more likely one.
      const double m2f = (y - noise_mean) * (y - noise_mean) / noise_var;
      const double m2w = (y - ph) * (y - ph) / pv;
      return m2f < m2w ? GampChannelOut<double>{ph, pv} : GampChannelOut<double>{y, 0.0};
    }
    const double zh = (w_fault * ph + w_work * y) / z0;
    const double second = (w_fault * (ph * ph + pv) + w_work * y * y) / z0;
    return {zh, second - zh * zh};
  };
}

inline GampChannelFn<double> gain_channel_fn(double delta, const UniformGainPrior& prior) {
  return [delta, prior](double ph, double pv, double y, int) -> GampChannelOut<double> {
    const double denom = delta + pv;
    GainMoments d{prior.prior_mean(), prior.prior_variance(), false};
    const double prec = y * y / denom;
    if (prec > 0.0) d = prior.update((ph * y / denom) / prec, 1.0 / prec, 1);
    const double zh = (delta * ph + pv * y * d.mean) / denom;
    const double pull = pv / denom;
    const double zv = delta * pull + pull * pull * y * y * d.variance;
    return {zh, zv};
  };
}

}  // namespace reference
}  // namespace calamp
