#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "calamp/gauss.hpp"
#include "calamp/priors.hpp"
#include "calamp/quadrature.hpp"

namespace calamp {

// Quadrature-backed counterparts of the analytic posterior updates. These
// evaluate the defining integrals directly and deliberately share no algebra
// with the closed forms they are used to check.

struct OracleMoments {
  double f0 = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  bool zero_evidence = false;
};

// Moments under an arbitrary log weight against a Gaussian on [lo, hi].
inline OracleMoments f_moments(const std::function<double(double)>& log_weight, double mean,
                               double var,
                               double lo = -std::numeric_limits<double>::infinity(),
                               double hi = std::numeric_limits<double>::infinity()) {
  const ScaledMoments m = gaussian_weight_moments(log_weight, mean, var, lo, hi);
  if (m.zero_evidence) return {0.0, 0.0, 0.0, true};
  OracleMoments out;
  out.f0 = m.m0 * std::exp(m.log_scale);  // may underflow; ratios never do
  out.mean = m.mean();
  out.variance = std::max(m.variance(), 0.0);
  return out;
}

// Bernoulli-Gauss posterior moments, real field: point mass at zero plus a
// Gaussian slab, the slab integrated numerically.
inline OracleMoments bernoulli_gauss_oracle(double rho, double sigma2, double r_hat,
                                            double r_var) {
  auto log_slab = [&](double x) { return log_gauss_pdf(x, 0.0, sigma2); };
  const ScaledMoments slab = gaussian_weight_moments(log_slab, r_hat, r_var,
                                                     -std::numeric_limits<double>::infinity(),
                                                     std::numeric_limits<double>::infinity());
  const double scale = std::exp(slab.log_scale);
  const double atom = (1.0 - rho) * gauss_pdf(0.0, r_hat, r_var);
  const double f0 = atom + rho * slab.m0 * scale;
  OracleMoments out;
  if (!(f0 > 0.0)) return {0.0, 0.0, 0.0, true};
  const double f1 = rho * slab.raw_m1() * scale;
  const double f2 = rho * slab.raw_m2() * scale;
  out.f0 = f0;
  out.mean = f1 / f0;
  out.variance = std::max(f2 / f0 - out.mean * out.mean, 0.0);
  return out;
}

struct ComplexOracleMoments {
  std::complex<double> mean{0.0, 0.0};
  double variance = 0.0;
};

// Complex Bernoulli-Gauss posterior moments. Both the circular slab and the
// circular pseudo-observation factorize over real and imaginary parts, so
// every piece is a one-dimensional integral.
inline ComplexOracleMoments complex_bernoulli_gauss_oracle(double rho, double sigma2,
                                                           std::complex<double> r_hat,
                                                           double r_var) {
  // Per-axis slab x pseudo-observation product with axis variances
  // sigma2 / 2 and r_var / 2; the product is a Gaussian whose center and
  // width bound the integration window.
  auto axis = [&](double r_axis) {
    auto g = [&](double u) {
      return std::exp(-u * u / sigma2 - (u - r_axis) * (u - r_axis) / r_var);
    };
    const double curv = 1.0 / sigma2 + 1.0 / r_var;
    const double center = r_axis / (r_var * curv);
    const double width = std::sqrt(0.5 / curv);
    const double lo = center - 14.0 * width;
    const double hi = center + 14.0 * width;
    struct {
      double i0, i1, i2;
    } out{};
    const double span = hi - lo;
    out.i0 = integrate([&](double u) { return g(u); }, lo, hi);
    out.i1 = integrate([&](double u) { return u * g(u); }, lo, hi, 1e-12,
                       1e-12 * out.i0 * span);
    out.i2 = integrate([&](double u) { return u * u * g(u); }, lo, hi, 1e-12,
                       1e-12 * out.i0 * span * span);
    return out;
  };
  const auto re = axis(r_hat.real());
  const auto im = axis(r_hat.imag());
  const double norm = 1.0 / (0.25 * kTwoPi * kTwoPi * sigma2 * r_var);
  const double slab0 = norm * re.i0 * im.i0;
  const std::complex<double> slab1 = norm * std::complex<double>(re.i1 * im.i0, re.i0 * im.i1);
  const double slab2 = norm * (re.i2 * im.i0 + re.i0 * im.i2);
  const double atom = (1.0 - rho) * gauss_pdf(std::complex<double>(0.0, 0.0), r_hat, r_var);
  const double f0 = atom + rho * slab0;
  ComplexOracleMoments out;
  if (!(f0 > 0.0)) return out;
  out.mean = rho * slab1 / f0;
  out.variance = std::max(rho * slab2 / f0 - std::norm(out.mean), 0.0);
  return out;
}

// Faulty-sensor row posterior by direct evaluation of the two-state mixture.
// Linear-space products: intended for moderate fuzz ranges, not for the
// underflow regime the production channel handles in the log domain.
struct FaultyOracleOut {
  double z_hat = 0.0;
  double z_var = 0.0;
};

inline FaultyOracleOut faulty_oracle(double epsilon, double noise_mean, double noise_var,
                                     std::span<const double> z_mean,
                                     std::span<const double> z_var, std::span<const double> y) {
  double pi_fault = 1.0, pi_work = 1.0;
  for (std::size_t m = 0; m < z_mean.size(); ++m) {
    pi_fault *= gauss_pdf(y[m], noise_mean, noise_var);
    pi_work *= gauss_pdf(y[m], z_mean[m], z_var[m]);
  }
  const double w_fault = epsilon * pi_fault;
  const double w_work = (1.0 - epsilon) * pi_work;
  const double z0 = w_fault + w_work;
  FaultyOracleOut out;
  const double zm = z_mean[0];
  const double zv = z_var[0];
  out.z_hat = (w_fault * zm + w_work * y[0]) / z0;
  const double second = (w_fault * (zm * zm + zv) + w_work * y[0] * y[0]) / z0;
  out.z_var = second - out.z_hat * out.z_hat;
  return out;
}

// Real gain channel oracle: one-dimensional quadrature over the gain of the
// per-sample evidence product, with the conditional z moments completed
// analytically. Independent of the accumulated-precision path used by the
// production channel.
struct GainRowOracleOut {
  double z_hat = 0.0;
  double z_var = 0.0;
  double d_hat = 0.0;
  double d_var = 0.0;
};

inline GainRowOracleOut real_gain_row_oracle(double delta, double prior_lo, double prior_hi,
                                             std::span<const double> z_mean,
                                             std::span<const double> z_var,
                                             std::span<const double> y) {
  auto log_weight = [&](double d) {
    double l = 0.0;
    for (std::size_t m = 0; m < z_mean.size(); ++m) {
      l += std::log(std::fabs(d)) + log_gauss_pdf(d * y[m], z_mean[m], delta + z_var[m]);
    }
    return l;
  };
  // Scale by the scanned peak so the weight stays representable.
  const int scan = 512;
  double peak = -std::numeric_limits<double>::infinity();
  double arg_peak = prior_lo;
  for (int i = 0; i <= scan; ++i) {
    const double d = prior_lo + (prior_hi - prior_lo) * i / scan;
    const double l = log_weight(d);
    if (l > peak) {
      peak = l;
      arg_peak = d;
    }
  }
  auto w = [&](double d) {
    const double l = log_weight(d) - peak;
    return l < -745.0 ? 0.0 : std::exp(l);
  };
  // Moments centered on the weight's peak to dodge cancellation when the
  // posterior is much narrower than its distance to the origin.
  const double c = arg_peak;
  const double span = prior_hi - prior_lo;
  const double w0 = integrate([&](double d) { return w(d); }, prior_lo, prior_hi);
  const double w1 = integrate([&](double d) { return (d - c) * w(d); }, prior_lo, prior_hi,
                              1e-12, 1e-12 * w0 * span);
  const double w2 = integrate([&](double d) { return (d - c) * (d - c) * w(d); }, prior_lo,
                              prior_hi, 1e-12, 1e-12 * w0 * span * span);
  GainRowOracleOut out;
  out.d_hat = c + w1 / w0;
  out.d_var = std::max(w2 / w0 - (w1 / w0) * (w1 / w0), 0.0);
  // Conditional moments of the first sample's z given d are Gaussian with a
  // mean linear in d, so the same centered integrals give z.
  const double v = delta * z_var[0] / (delta + z_var[0]);
  const double slope = z_var[0] * y[0] / (delta + z_var[0]);
  const double z0_at_c = (delta * z_mean[0] + z_var[0] * y[0] * c) / (delta + z_var[0]);
  out.z_hat = z0_at_c + slope * (w1 / w0);
  out.z_var = std::max(v + slope * slope * (w2 / w0 - (w1 / w0) * (w1 / w0)), 0.0);
  return out;
}

// Wirtinger-aware centered finite difference of a mean/variance update: for
// exact posterior-moment families, var = scale * d(mean)/d(obs). Real fields
// use the plain centered difference; complex fields combine the real- and
// imaginary-axis differences as (d_re - i d_im) / 2.
template <class T, class F>
double mean_derivative_residual(const F& update, const T& at, double scale, double step) {
  if constexpr (FieldTraits<T>::is_complex) {
    const T h_re(step, 0.0);
    const T h_im(0.0, step);
    const T d_re = (update(at + h_re).first - update(at - h_re).first) / (2.0 * step);
    const T d_im = (update(at + h_im).first - update(at - h_im).first) / (2.0 * step);
    const T wirtinger = 0.5 * (d_re - T(0.0, 1.0) * d_im);
    return std::abs(scale * wirtinger - T(update(at).second, 0.0));
  } else {
    const double d = (update(at + step).first - update(at - step).first) / (2.0 * step);
    return std::fabs(scale * d - update(at).second);
  }
}

}  // namespace calamp
