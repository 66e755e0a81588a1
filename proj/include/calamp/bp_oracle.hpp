#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "calamp/matrix.hpp"
#include "calamp/priors.hpp"

namespace calamp {

struct BpConfig {
  int t_max = 200;
  double tol = 1e-10;
  double variance_floor = 1e-12;
};

template <class T>
struct BpResult {
  MatX<T> x_hat;
  MatXd x_var;
  int iterations = 0;
  bool converged = false;
};

// Per-edge message scheme: O(M N P) messages per iteration, each channel call
// assembling the P-vector from the cavity value of the updated sample and the
// previous full estimates of the others. Exact cavity sums, no self-feedback
// correction term. Intended for small instances as a reference for the
// reduced iteration.
template <class T, class Channel>
BpResult<T> bp_oracle_solve(const MatX<T>& F, const MatX<T>& y, const BernoulliGaussPrior& prior,
                            const Channel& channel, const BpConfig& cfg = {}) {
  const Eigen::Index m_rows = F.rows();
  const Eigen::Index n = F.cols();
  const Eigen::Index p = y.cols();
  if (y.rows() != m_rows) throw std::invalid_argument("bp_oracle_solve: shape mismatch");
  const double floor = cfg.variance_floor;
  const MatXd F2 = F.array().abs2().matrix();

  // Messages x_{il -> mu l}: one M x N matrix pair per sample.
  std::vector<MatX<T>> msg_mean(p, MatX<T>::Zero(m_rows, n));
  std::vector<MatXd> msg_var(p, MatXd::Constant(m_rows, n, prior.prior_variance()));
  // Previous-iteration full estimates of z per (sensor, sample).
  MatX<T> full_mean_prev = y;
  MatXd full_var_prev = MatXd::Ones(m_rows, p);

  BpResult<T> out;
  out.x_hat = MatX<T>::Zero(n, p);
  out.x_var = MatXd::Constant(n, p, prior.prior_variance());

  std::vector<T> sm(p), sy(p);
  std::vector<double> sv(p);

  MatX<T> full_mean(m_rows, p);
  MatXd full_var(m_rows, p);
  std::vector<MatX<T>> zh(p, MatX<T>::Zero(m_rows, n));
  std::vector<MatXd> zv(p, MatXd::Zero(m_rows, n));
  std::vector<MatX<T>> cav_mean(p, MatX<T>::Zero(m_rows, n));
  std::vector<MatXd> cav_var(p, MatXd::Zero(m_rows, n));

  for (int t = 0; t < cfg.t_max; ++t) {
    // Linear step: full and cavity estimates of z.
    for (Eigen::Index l = 0; l < p; ++l) {
      for (Eigen::Index mu = 0; mu < m_rows; ++mu) {
        T mean_sum = T(0);
        double var_sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          mean_sum += F(mu, i) * msg_mean[l](mu, i);
          var_sum += F2(mu, i) * msg_var[l](mu, i);
        }
        full_mean(mu, l) = mean_sum;
        full_var(mu, l) = var_sum;
        for (Eigen::Index i = 0; i < n; ++i) {
          cav_mean[l](mu, i) = mean_sum - F(mu, i) * msg_mean[l](mu, i);
          cav_var[l](mu, i) = std::max(var_sum - F2(mu, i) * msg_var[l](mu, i), floor);
        }
      }
    }

    // Channel step per edge.
    for (Eigen::Index l = 0; l < p; ++l) {
      for (Eigen::Index mu = 0; mu < m_rows; ++mu) {
        Eigen::Index k = 1;
        for (Eigen::Index mm = 0; mm < p; ++mm) {
          if (mm == l) continue;
          sm[k] = full_mean_prev(mu, mm);
          sv[k] = full_var_prev(mu, mm);
          sy[k] = y(mu, mm);
          ++k;
        }
        sy[0] = y(mu, l);
        for (Eigen::Index i = 0; i < n; ++i) {
          sm[0] = cav_mean[l](mu, i);
          sv[0] = cav_var[l](mu, i);
          const auto s = channel.sample_moments(std::span<const T>(sm),
                                                std::span<const double>(sv),
                                                std::span<const T>(sy), static_cast<int>(mu));
          zh[l](mu, i) = s.z_hat;
          zv[l](mu, i) = std::max(s.z_var, 0.0);
        }
      }
    }

    // Variable-side step: cavity sums over sensors, then prior update.
    double delta2 = 0.0;
    for (Eigen::Index l = 0; l < p; ++l) {
      for (Eigen::Index i = 0; i < n; ++i) {
        double prec_sum = 0.0;
        T corr_sum = T(0);
        for (Eigen::Index mu = 0; mu < m_rows; ++mu) {
          const double pv = cav_var[l](mu, i);
          prec_sum += F2(mu, i) * (pv - zv[l](mu, i)) / (pv * pv);
          corr_sum += FieldTraits<T>::conj(F(mu, i)) * (zh[l](mu, i) - cav_mean[l](mu, i)) / pv;
        }
        for (Eigen::Index mu = 0; mu < m_rows; ++mu) {
          const double pv = cav_var[l](mu, i);
          const double prec =
              std::max(prec_sum - F2(mu, i) * (pv - zv[l](mu, i)) / (pv * pv), floor);
          const T corr =
              corr_sum - FieldTraits<T>::conj(F(mu, i)) * (zh[l](mu, i) - cav_mean[l](mu, i)) / pv;
          const double r_var = 1.0 / prec;
          const T r_hat = corr * r_var;
          const auto post = prior.update(r_hat, r_var);
          msg_mean[l](mu, i) = post.mean;
          msg_var[l](mu, i) = post.variance;
        }
        const double bel_var = 1.0 / std::max(prec_sum, floor);
        const T bel_hat = corr_sum * bel_var;
        const auto post = prior.update(bel_hat, bel_var);
        delta2 += abs2(T(post.mean - out.x_hat(i, l)));
        out.x_hat(i, l) = post.mean;
        out.x_var(i, l) = post.variance;
      }
    }
    full_mean_prev = full_mean;
    full_var_prev = full_var;
    out.iterations = t + 1;
    if (delta2 / static_cast<double>(n * p) < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace calamp
