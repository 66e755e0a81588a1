#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "calamp/channels.hpp"
#include "calamp/field.hpp"
#include "calamp/matrix.hpp"
#include "calamp/priors.hpp"

namespace calamp {

struct SolverConfig {
  double beta = 0.8;            // damping; 1 disables
  int t_max = 300;
  double tol = 1e-12;           // stop when mean |dx|^2 / (N P) < tol
  double variance_floor = 1e-12;
};

struct IterationDiag {
  double mean_delta2 = 0.0;  // mean squared change of the signal estimate
  double min_x_var = 0.0;
  double max_x_var = 0.0;
  int zero_evidence = 0;
  bool diverged = false;
  std::string divergence_field;
};

// All per-iteration estimator fields. Mean/variance pairs follow the GAMP
// naming scheme: (x_hat, x_var) signal beliefs, (r_hat, r_var) the cavity
// pseudo-observations feeding the prior, (p_hat, p_var) the linear-step
// estimate of z, (z_hat, z_var) the channel posterior of z.
template <class T>
struct SolverState {
  MatX<T> x_hat;
  MatXd x_var;
  MatX<T> r_hat;
  MatXd r_var;
  MatX<T> p_hat;
  MatXd p_var;
  MatX<T> z_hat;
  MatXd z_var;
  MatX<T> d_hat;  // per (sensor, sample) gain estimates, gain channels only
  MatXd d_var;
  bool has_gain_estimates = false;
  int t = 0;
};

// Variance damping: harmonic blend of the freshly computed value with the
// previous iterate. beta = 1 returns the new value unchanged.
inline double damp_variance(double v_new, double v_prev, double beta) {
  if (beta >= 1.0) return v_new;
  return 1.0 / (beta / v_new + (1.0 - beta) / (beta * v_prev));
}

// Mean damping: convex blend with weight beta_eff = beta * v_damped / v_new,
// the pairing of each mean with its damped variance.
template <class T>
T damp_mean(const T& m_new, const T& m_prev, double beta_eff) {
  return m_new * beta_eff + m_prev * (1.0 - beta_eff);
}

// Starting state: zero signal estimate at the prior variance, the linear and
// channel estimates of z pinned to the observations with unit uncertainty.
template <class T>
SolverState<T> initialize(Eigen::Index n, const MatX<T>& y, const BernoulliGaussPrior& prior) {
  const Eigen::Index m = y.rows();
  const Eigen::Index p = y.cols();
  SolverState<T> s;
  s.x_hat = MatX<T>::Zero(n, p);
  s.x_var = MatXd::Constant(n, p, prior.prior_variance());
  s.r_hat = MatX<T>::Zero(n, p);
  s.r_var = MatXd::Constant(n, p, prior.prior_variance());
  s.p_hat = y;
  s.z_hat = y;
  s.p_var = MatXd::Ones(m, p);
  s.z_var = MatXd::Ones(m, p);
  s.t = 0;
  return s;
}

namespace detail {

template <class Sample>
concept HasGainEstimate = requires(const Sample& s) {
  s.d_hat;
  s.d_var;
};

template <class T, class Channel>
void channel_sweep(SolverState<T>& s, const MatX<T>& p_hat_prev, const MatXd& p_var_prev,
                   const MatX<T>& y, const Channel& channel, IterationDiag* diag) {
  const Eigen::Index m_rows = y.rows();
  const Eigen::Index p = y.cols();
  std::vector<T> sm(p), sy(p);
  std::vector<double> sv(p);
  using Sample = decltype(channel.sample_moments(std::span<const T>(), std::span<const double>(),
                                                 std::span<const T>(), 0));
  constexpr bool kGain = HasGainEstimate<Sample>;
  if constexpr (kGain) {
    if (!s.has_gain_estimates) {
      s.d_hat = MatX<T>::Zero(m_rows, p);
      s.d_var = MatXd::Zero(m_rows, p);
      s.has_gain_estimates = true;
    }
  }
  for (Eigen::Index mu = 0; mu < m_rows; ++mu) {
    for (Eigen::Index l = 0; l < p; ++l) {
      sm[0] = s.p_hat(mu, l);
      sv[0] = s.p_var(mu, l);
      sy[0] = y(mu, l);
      Eigen::Index k = 1;
      for (Eigen::Index mm = 0; mm < p; ++mm) {
        if (mm == l) continue;
        sm[k] = p_hat_prev(mu, mm);
        sv[k] = p_var_prev(mu, mm);
        sy[k] = y(mu, mm);
        ++k;
      }
      const auto out = channel.sample_moments(std::span<const T>(sm), std::span<const double>(sv),
                                              std::span<const T>(sy), static_cast<int>(mu));
      s.z_hat(mu, l) = out.z_hat;
      s.z_var(mu, l) = std::max(out.z_var, 0.0);
      if (out.zero_evidence) ++diag->zero_evidence;
      if constexpr (kGain) {
        s.d_hat(mu, l) = out.d_hat;
        s.d_var(mu, l) = out.d_var;
      }
    }
  }
}

template <class T>
const char* first_nonfinite(const SolverState<T>& s) {
  if (!s.p_var.allFinite()) return "p_var";
  if (!s.p_hat.allFinite()) return "p_hat";
  if (!s.z_var.allFinite()) return "z_var";
  if (!s.z_hat.allFinite()) return "z_hat";
  if (!s.r_var.allFinite()) return "r_var";
  if (!s.r_hat.allFinite()) return "r_hat";
  if (!s.x_var.allFinite()) return "x_var";
  if (!s.x_hat.allFinite()) return "x_hat";
  return nullptr;
}

}  // namespace detail

// One full sweep of the iteration: linear step with self-feedback correction,
// channel posterior, cavity assembly, prior update. F2 must hold the
// entrywise |F|^2. Matrix products run per sample column so that a P-column
// solve performs exactly the arithmetic of P single-column solves.
template <class T, class Channel>
IterationDiag iterate(SolverState<T>& s, const MatX<T>& F, const MatXd& F2, const MatX<T>& y,
                      const BernoulliGaussPrior& prior, const Channel& channel,
                      const SolverConfig& cfg) {
  const Eigen::Index n = F.cols();
  const Eigen::Index p = y.cols();
  const double beta = cfg.beta;
  const double floor = cfg.variance_floor;
  IterationDiag diag;

  const MatX<T> p_hat_prev = s.p_hat;
  const MatXd p_var_prev = s.p_var;
  const MatX<T> z_hat_prev = s.z_hat;
  const MatX<T> x_hat_prev = s.x_hat;

  // Linear step for z, with the correction term cancelling self-feedback.
  for (Eigen::Index l = 0; l < p; ++l) {
    VecXd pv0 = F2 * s.x_var.col(l);
    for (Eigen::Index mu = 0; mu < pv0.size(); ++mu) {
      const double v0 = std::max(pv0(mu), floor);
      const double v = std::max(damp_variance(v0, p_var_prev(mu, l), beta), floor);
      s.p_var(mu, l) = v;
      pv0(mu) = v0;
    }
    const VecX<T> lin = F * s.x_hat.col(l);
    for (Eigen::Index mu = 0; mu < lin.size(); ++mu) {
      const T onsager = (z_hat_prev(mu, l) - p_hat_prev(mu, l)) *
                        (s.p_var(mu, l) / std::max(p_var_prev(mu, l), floor));
      const T ph0 = lin(mu) - onsager;
      const double beta_eff = beta >= 1.0 ? 1.0 : beta * s.p_var(mu, l) / pv0(mu);
      s.p_hat(mu, l) = damp_mean(ph0, p_hat_prev(mu, l), beta_eff);
    }
  }

  // Channel posterior of z; samples couple only here.
  detail::channel_sweep(s, p_hat_prev, p_var_prev, y, channel, &diag);

  // Cavity fields feeding the prior.
  const MatXd r_var_prev = s.r_var;
  const MatX<T> r_hat_prev = s.r_hat;
  for (Eigen::Index l = 0; l < p; ++l) {
    VecXd gain(s.p_var.rows());
    VecX<T> resid(s.p_var.rows());
    for (Eigen::Index mu = 0; mu < gain.size(); ++mu) {
      const double pv = s.p_var(mu, l);
      gain(mu) = (pv - s.z_var(mu, l)) / (pv * pv);
      resid(mu) = (s.z_hat(mu, l) - s.p_hat(mu, l)) / pv;
    }
    const VecXd denom = F2.transpose() * gain;
    const VecX<T> corr = F.adjoint() * resid;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double rv0 = 1.0 / std::max(denom(i), floor);
      const double rv = std::max(damp_variance(rv0, r_var_prev(i, l), beta), floor);
      s.r_var(i, l) = rv;
      const T rh0 = s.x_hat(i, l) + corr(i) * rv;
      const double beta_eff = beta >= 1.0 ? 1.0 : beta * rv / rv0;
      s.r_hat(i, l) = damp_mean(rh0, r_hat_prev(i, l), beta_eff);
    }
  }

  // Prior update.
  for (Eigen::Index l = 0; l < p; ++l) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto post = prior.update(s.r_hat(i, l), s.r_var(i, l));
      s.x_hat(i, l) = post.mean;
      s.x_var(i, l) = post.variance;
    }
  }

  s.t += 1;
  if (const char* field = detail::first_nonfinite(s)) {
    diag.diverged = true;
    diag.divergence_field = field;
    return diag;
  }
  diag.mean_delta2 = (s.x_hat - x_hat_prev).squaredNorm() / static_cast<double>(n * p);
  diag.min_x_var = s.x_var.minCoeff();
  diag.max_x_var = s.x_var.maxCoeff();
  return diag;
}

template <class T>
struct SolveResult {
  MatX<T> x_hat;
  MatXd x_var;
  MatX<T> p_hat;  // final estimate of z
  MatXd p_var;
  VecX<T> d_hat;  // per-sensor gain estimate averaged over samples
  bool has_gain_estimates = false;
  std::vector<IterationDiag> history;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  std::string divergence_note;
  int zero_evidence_total = 0;
};

// Run the iteration until the signal estimate settles or t_max is reached.
// On divergence (non-finite field) the last finite state is returned,
// flagged as neither converged nor silently repaired.
template <class T, class Channel>
SolveResult<T> solve(const MatX<T>& F, const MatX<T>& y, const BernoulliGaussPrior& prior,
                     const Channel& channel, const SolverConfig& cfg) {
  if (F.rows() != y.rows()) throw std::invalid_argument("solve: F and y row mismatch");
  const MatXd F2 = F.array().abs2().matrix();
  SolverState<T> s = initialize(F.cols(), y, prior);
  SolverState<T> last_good = s;
  SolveResult<T> out;
  for (int t = 0; t < cfg.t_max; ++t) {
    const IterationDiag diag = iterate(s, F, F2, y, prior, channel, cfg);
    out.history.push_back(diag);
    out.iterations = t + 1;
    if (diag.diverged) {
      out.diverged = true;
      out.divergence_note =
          "non-finite " + diag.divergence_field + " at iteration " + std::to_string(t + 1);
      s = last_good;
      break;
    }
    out.zero_evidence_total += diag.zero_evidence;
    last_good = s;
    if (diag.mean_delta2 < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.x_hat = s.x_hat;
  out.x_var = s.x_var;
  out.p_hat = s.p_hat;
  out.p_var = s.p_var;
  if (s.has_gain_estimates && s.d_hat.size() > 0) {
    out.has_gain_estimates = true;
    out.d_hat = s.d_hat.rowwise().mean();
  }
  return out;
}

}  // namespace calamp
