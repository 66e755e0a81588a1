#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "calamp/channels.hpp"
#include "calamp/gamp_reference.hpp"
#include "calamp/oracles.hpp"
#include "calamp/rng.hpp"
#include "calamp/solver.hpp"
#include "calamp/synthgen.hpp"

namespace calamp {

struct SuiteResult {
  std::string name;
  int cases = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

namespace selfcheck_detail {

inline double rel_err(double a, double oracle) {
  return std::fabs(a - oracle) / (std::fabs(oracle) + 1e-300);
}

// Relative error with an absolute scale guard: quadrature oracles carry
// relative error on the integral scale, so tiny means are compared on the
// row scale rather than their own.
inline double scaled_err(double a, double oracle, double scale) {
  return std::fabs(a - oracle) / (std::max(std::fabs(oracle), scale) + 1e-300);
}

}  // namespace selfcheck_detail

// Analytic Bernoulli-Gauss updates against direct quadrature.
inline SuiteResult check_signal_prior_quadrature(int cases, std::uint64_t seed = 101) {
  using selfcheck_detail::scaled_err;
  Rng rng(seed);
  double worst = 0.0;
  for (int k = 0; k < cases; ++k) {
    const double rho = 0.05 + 0.9 * rng.next_double();
    const double sigma2 = 0.3 + 2.0 * rng.next_double();
    const BernoulliGaussPrior prior(rho, sigma2);
    const double r = 4.0 * (rng.next_double() - 0.5);
    const double v = 0.02 + 2.0 * rng.next_double();
    const auto got = prior.update(r, v);
    const auto want = bernoulli_gauss_oracle(rho, sigma2, r, v);
    const double scale = std::sqrt(prior.prior_variance());
    worst = std::max(worst, scaled_err(got.mean, want.mean, scale));
    worst = std::max(worst, scaled_err(got.variance, want.variance, scale * scale));

    const std::complex<double> rc(3.0 * (rng.next_double() - 0.5),
                                  3.0 * (rng.next_double() - 0.5));
    const auto got_c = prior.update(rc, v);
    const auto want_c = complex_bernoulli_gauss_oracle(rho, sigma2, rc, v);
    worst = std::max(worst, scaled_err(got_c.mean.real(), want_c.mean.real(), scale));
    worst = std::max(worst, scaled_err(got_c.mean.imag(), want_c.mean.imag(), scale));
    worst = std::max(worst, scaled_err(got_c.variance, want_c.variance, scale * scale));
  }
  SuiteResult out{"signal-prior vs quadrature", cases, worst, 1e-8, false};
  out.pass = worst < out.tolerance;
  return out;
}

// Uniform gain posterior (power-weighted truncated moments) against
// quadrature of the same weight.
inline SuiteResult check_gain_prior_quadrature(int cases, std::uint64_t seed = 202) {
  using selfcheck_detail::scaled_err;
  Rng rng(seed);
  double worst = 0.0;
  for (int k = 0; k < cases; ++k) {
    const double wd = 0.2 + 1.4 * rng.next_double();
    const UniformGainPrior prior(wd, 1.1);
    const int p = 1 + static_cast<int>(rng.next_double() * 6);
    const double mean = 1.0 + 6.0 * (rng.next_double() - 0.5);
    const double var = std::pow(10.0, -4.0 + 4.5 * rng.next_double());
    const auto got = prior.update(mean, var, p);
    auto log_w = [p](double t) { return p * std::log(t); };
    const auto want = f_moments(log_w, mean, var, prior.lo(), prior.hi());
    if (want.zero_evidence) continue;
    worst = std::max(worst, scaled_err(got.mean, want.mean, 1e-6));
    worst = std::max(worst, scaled_err(got.variance, want.variance, 1e-12));
  }
  SuiteResult out{"gain-prior vs quadrature", cases, worst, 1e-8, false};
  out.pass = worst < out.tolerance;
  return out;
}

// Faulty and gain channels against their oracles. `perturbation` is a test
// hook that skews the analytic channel output to prove the suite catches
// disagreement; it must stay 0 in production runs.
inline SuiteResult check_channels_quadrature(int cases, std::uint64_t seed = 303,
                                             double perturbation = 0.0) {
  using selfcheck_detail::scaled_err;
  Rng rng(seed);
  double worst = 0.0;
  std::vector<double> zm, zv, yy;
  for (int k = 0; k < cases; ++k) {
    const int p = 1 + static_cast<int>(rng.next_double() * 4);
    zm.resize(p);
    zv.resize(p);
    yy.resize(p);
    for (int m = 0; m < p; ++m) {
      zm[m] = 2.0 * (rng.next_double() - 0.5);
      zv[m] = 0.05 + 1.5 * rng.next_double();
      yy[m] = 2.5 * (rng.next_double() - 0.5);
    }
    // Faulty channel vs the direct two-state mixture.
    const double eps = 0.05 + 0.9 * rng.next_double();
    const FaultyChannel faulty(eps, 0.0, 0.1 + rng.next_double());
    auto got_f = faulty.sample_moments(zm, zv, yy);
    got_f.z_hat += perturbation;
    const auto want_f = faulty_oracle(faulty.epsilon, faulty.noise_mean, faulty.noise_var,
                                      zm, zv, yy);
    worst = std::max(worst, scaled_err(got_f.z_hat, want_f.z_hat, 1.0));
    worst = std::max(worst, scaled_err(got_f.z_var, want_f.z_var, 1.0));

    // Real gain channel vs quadrature over the gain.
    const double wd = 0.3 + 1.2 * rng.next_double();
    const double delta = std::pow(10.0, -3.0 + 2.5 * rng.next_double());
    const RealGainChannel gain(delta, UniformGainPrior(wd, 1.1));
    auto got_g = gain.sample_moments(zm, zv, yy);
    got_g.z_hat += perturbation;
    const auto want_g = real_gain_row_oracle(gain.delta, gain.prior.lo(), gain.prior.hi(),
                                             zm, zv, yy);
    worst = std::max(worst, scaled_err(got_g.z_hat, want_g.z_hat, 1.0));
    worst = std::max(worst, scaled_err(got_g.z_var, want_g.z_var, 1.0));
    worst = std::max(worst, scaled_err(got_g.d_hat, want_g.d_hat, 1.0));
    worst = std::max(worst, scaled_err(got_g.d_var, want_g.d_var, 1.0));
  }
  SuiteResult out{"channels vs quadrature", cases, worst, 1e-6, false};
  out.pass = worst < out.tolerance;
  return out;
}

// Complex gain channel against an independent reassembly: the gain
// pseudo-observation by direct accumulation, the modulus moments by
// half-line quadrature, the sample posterior rebuilt from scratch.
inline SuiteResult check_complex_gain_quadrature(int cases, std::uint64_t seed = 606,
                                                 double perturbation = 0.0) {
  using selfcheck_detail::scaled_err;
  using Cx = std::complex<double>;
  Rng rng(seed);
  double worst = 0.0;
  for (int k = 0; k < cases; ++k) {
    const int p = 1 + static_cast<int>(rng.next_double() * 4);
    std::vector<Cx> zm(p), y(p);
    std::vector<double> zv(p);
    for (int m = 0; m < p; ++m) {
      zm[m] = Cx(rng.next_double() - 0.5, rng.next_double() - 0.5);
      zv[m] = 0.05 + 1.5 * rng.next_double();
      y[m] = Cx(2.0 * (rng.next_double() - 0.5), 2.0 * (rng.next_double() - 0.5));
    }
    const double delta = std::pow(10.0, -3.0 + 2.5 * rng.next_double());
    const ComplexGainChannel channel(delta, ComplexNormalGainPrior(10.0));
    auto got = channel.sample_moments(zm, zv, y);
    got.z_hat += perturbation;

    double prec = 0.0;
    Cx acc(0.0, 0.0);
    for (int m = 0; m < p; ++m) {
      const double denom = delta + zv[m];
      prec += std::norm(y[m]) / denom;
      acc += zm[m] * std::conj(y[m]) / denom;
    }
    if (!(prec > 0.0)) continue;
    const Cx d_obs = acc / prec;
    const double d_var = 1.0 / prec;
    if (std::abs(d_obs) < 1e-8) continue;
    auto log_w = [p](double t) { return p * std::log(t); };
    const OracleMoments mod = f_moments(log_w, std::abs(d_obs), d_var, 0.0,
                                        std::numeric_limits<double>::infinity());
    if (mod.zero_evidence) continue;
    const Cx d_hat = d_obs / std::abs(d_obs) * mod.mean;
    const double denom0 = delta + zv[0];
    const Cx z_hat = (zm[0] * delta + y[0] * (zv[0] * d_hat)) / denom0;
    const double pull = zv[0] / denom0;
    const double z_var = delta * pull + pull * pull * std::norm(y[0]) * d_var;
    worst = std::max(worst, scaled_err(std::abs(got.z_hat - z_hat), 0.0, 1.0));
    worst = std::max(worst, scaled_err(got.z_var, z_var, 1.0));
    worst = std::max(worst, scaled_err(std::abs(got.d_hat - d_hat), 0.0, 1.0));
    worst = std::max(worst, scaled_err(got.d_var, d_var, 1.0));
  }
  SuiteResult out{"complex-gain vs quadrature", cases, worst, 1e-6, false};
  out.pass = worst < out.tolerance;
  return out;
}

// var = scale * d(mean)/d(obs) for every shipped posterior-moment family.
inline SuiteResult check_derivative_identities(int cases, std::uint64_t seed = 404) {
  Rng rng(seed);
  double worst = 0.0;
  const double step = 1e-5;
  std::vector<double> zm, zv, yy;
  for (int k = 0; k < cases; ++k) {
    const double rho = 0.1 + 0.8 * rng.next_double();
    const BernoulliGaussPrior prior(rho, 1.0);
    const double v = 0.05 + 1.5 * rng.next_double();
    const double r = 3.0 * (rng.next_double() - 0.5);

    worst = std::max(worst, mean_derivative_residual<double>(
                                [&](double x) {
                                  const auto u = prior.update(x, v);
                                  return std::pair<double, double>(u.mean, u.variance);
                                },
                                r, v, step));
    const std::complex<double> rc(r, 2.0 * (rng.next_double() - 0.5));
    worst = std::max(worst, mean_derivative_residual<std::complex<double>>(
                                [&](std::complex<double> x) {
                                  const auto u = prior.update(x, v);
                                  return std::pair<std::complex<double>, double>(u.mean,
                                                                                 u.variance);
                                },
                                rc, v, step));

    const int p = 2 + static_cast<int>(rng.next_double() * 3);
    zm.resize(p);
    zv.resize(p);
    yy.resize(p);
    for (int m = 0; m < p; ++m) {
      zm[m] = 2.0 * (rng.next_double() - 0.5);
      zv[m] = 0.1 + 1.0 * rng.next_double();
      yy[m] = 2.0 * (rng.next_double() - 0.5);
    }
    const FaultyChannel faulty(0.3, 0.0, 0.4);
    auto faulty_mean = [&](double x) {
      std::vector<double> z = zm;
      z[0] = x;
      const auto s = faulty.sample_moments(z, zv, yy);
      return std::pair<double, double>(s.z_hat, s.z_var);
    };
    worst = std::max(worst,
                     mean_derivative_residual<double>(faulty_mean, zm[0], zv[0], step));

    const RealGainChannel gain(0.05, UniformGainPrior(1.0, 1.1));
    auto gain_mean = [&](double x) {
      std::vector<double> z = zm;
      z[0] = x;
      const auto s = gain.sample_moments(z, zv, yy);
      return std::pair<double, double>(s.z_hat, s.z_var);
    };
    worst = std::max(worst, mean_derivative_residual<double>(gain_mean, zm[0], zv[0], step));

    const CalibratedChannel<double> calib(0.05, std::vector<double>(1, 1.2));
    auto calib_mean = [&](double x) {
      std::vector<double> z = zm;
      z[0] = x;
      const auto s = calib.sample_moments(z, zv, yy, 0);
      return std::pair<double, double>(s.z_hat, s.z_var);
    };
    worst = std::max(worst, mean_derivative_residual<double>(calib_mean, zm[0], zv[0], step));

    // Gain-prior family: d_var = d_prec_var * d(d_hat)/d(d_mean).
    const UniformGainPrior gp(1.0, 1.1);
    const double dv = 0.01 + 0.5 * rng.next_double();
    const double dm = 0.4 + 1.4 * rng.next_double();
    auto gp_mean = [&](double x) {
      const auto u = gp.update(x, dv, p);
      return std::pair<double, double>(u.mean, u.variance);
    };
    worst = std::max(worst, mean_derivative_residual<double>(gp_mean, dm, dv, step));
  }
  SuiteResult out{"derivative identities", cases, worst, 1e-5, false};
  out.pass = worst < out.tolerance;
  return out;
}

// The coupled solver at P = 1 against the plain GAMP loop, iterate by
// iterate.
inline SuiteResult check_gamp_reduction(int instances, int iters = 10,
                                        std::uint64_t seed = 505) {
  Rng rng(seed);
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const int n = 48 + static_cast<int>(rng.next_double() * 80);
    const int m = std::max(8, static_cast<int>(n * (0.4 + 0.8 * rng.next_double())));
    const double rho = 0.1 + 0.4 * rng.next_double();
    const double beta = k % 2 == 0 ? 1.0 : 0.8;

    InstanceParams params;
    params.n = n;
    params.m = m;
    params.p = 1;
    params.prior.rho = rho;
    params.seed = rng.next_u64();
    reference::GampChannelFn<double> ref_channel;
    SolveResult<double> unused;
    const int which = k % 3;
    if (which == 0) {
      params.channel.type = ChannelType::kCalibrated;
      params.channel.delta = 0.01;
      params.channel.calibrated_gain = 1.1;
    } else if (which == 1) {
      params.channel.type = ChannelType::kFaulty;
      params.channel.epsilon = 0.25;
    } else {
      params.channel.type = ChannelType::kRealGain;
      params.channel.delta = 0.02;
      params.channel.gain_width = 1.0;
    }
    const auto inst = generate_instance<double>(params);
    const BernoulliGaussPrior prior(rho, 1.0);
    SolverConfig cfg;
    cfg.beta = beta;
    cfg.t_max = iters;

    std::vector<std::vector<double>> f_rows(m, std::vector<double>(n));
    for (int mu = 0; mu < m; ++mu)
      for (int i = 0; i < n; ++i) f_rows[mu][i] = inst.mixing(mu, i);
    std::vector<double> y(m);
    for (int mu = 0; mu < m; ++mu) y[mu] = inst.observations(mu, 0);

    std::vector<std::vector<double>> trace;
    const MatXd F2 = inst.mixing.array().abs2().matrix();
    SolverState<double> state = initialize(n, inst.observations, prior);
    if (which == 0) {
      CalibratedChannel<double> ch(params.channel.delta,
                                   std::vector<double>(m, params.channel.calibrated_gain));
      ref_channel = reference::calibrated_channel_fn(ch.delta, ch.gains);
      for (int t = 0; t < iters; ++t) {
        iterate(state, inst.mixing, F2, inst.observations, prior, ch, cfg);
        trace.emplace_back(state.x_hat.col(0).begin(), state.x_hat.col(0).end());
      }
    } else if (which == 1) {
      FaultyChannel ch(params.channel.epsilon, 0.0, rho);
      ref_channel = reference::faulty_channel_fn(ch.epsilon, ch.noise_mean, ch.noise_var);
      for (int t = 0; t < iters; ++t) {
        iterate(state, inst.mixing, F2, inst.observations, prior, ch, cfg);
        trace.emplace_back(state.x_hat.col(0).begin(), state.x_hat.col(0).end());
      }
    } else {
      RealGainChannel ch(params.channel.delta,
                         UniformGainPrior(params.channel.gain_width, 1.1));
      ref_channel = reference::gain_channel_fn(ch.delta, ch.prior);
      for (int t = 0; t < iters; ++t) {
        iterate(state, inst.mixing, F2, inst.observations, prior, ch, cfg);
        trace.emplace_back(state.x_hat.col(0).begin(), state.x_hat.col(0).end());
      }
    }
    (void)unused;

    const auto ref = reference::run_gamp<double>(f_rows, y, rho, 1.0, ref_channel, beta, iters,
                                                 cfg.variance_floor);
    for (int t = 0; t < iters; ++t)
      for (int i = 0; i < n; ++i)
        worst = std::max(worst, std::fabs(trace[t][i] - ref.x_hat_per_iter[t][i]));
  }
  SuiteResult out{"P=1 GAMP reduction", instances, worst, 1e-12, false};
  out.pass = worst < out.tolerance;
  return out;
}

// The oracle suites behind the `selfcheck` CLI command.
inline std::vector<SuiteResult> run_selfcheck(int scale = 1, double channel_perturbation = 0.0) {
  std::vector<SuiteResult> results;
  results.push_back(check_signal_prior_quadrature(60 * scale));
  results.push_back(check_gain_prior_quadrature(120 * scale));
  results.push_back(check_channels_quadrature(60 * scale, 303, channel_perturbation));
  results.push_back(check_complex_gain_quadrature(60 * scale, 606, channel_perturbation));
  results.push_back(check_derivative_identities(40 * scale));
  results.push_back(check_gamp_reduction(3 * scale));
  return results;
}

}  // namespace calamp
