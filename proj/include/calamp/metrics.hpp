#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "calamp/field.hpp"
#include "calamp/matrix.hpp"

namespace calamp {

// Success threshold on log10(1 - mu) used by the sweep harness.
inline constexpr double kSuccessLog10Gap = -5.0;

struct RecoveryScore {
  double mu = 0.0;        // mean over columns of |corr|, in [0, 1]
  double log10_gap = 0.0; // log10(1 - mu), clamped away from -inf
  std::vector<double> per_column_mu;
  double mse = 0.0;
  bool degenerate_column = false;  // some column had no variance

  bool success() const { return log10_gap < kSuccessLog10Gap; }
};

template <class T>
double mse(const MatX<T>& x_true, const MatX<T>& x_hat) {
  if (x_true.rows() != x_hat.rows() || x_true.cols() != x_hat.cols())
    throw std::invalid_argument("mse: shape mismatch");
  return (x_true - x_hat).squaredNorm() / static_cast<double>(x_true.size());
}

// Normalized cross-correlation with empirical means removed, averaged over
// sample columns. The modulus makes it invariant to a per-column global
// phase of the estimate and to positive rescaling; columns with no variance
// score 0 and are flagged.
template <class T>
RecoveryScore cross_correlation(const MatX<T>& x_true, const MatX<T>& x_hat) {
  if (x_true.rows() != x_hat.rows() || x_true.cols() != x_hat.cols())
    throw std::invalid_argument("cross_correlation: shape mismatch");
  const Eigen::Index n = x_true.rows();
  const Eigen::Index p = x_true.cols();
  if (n == 0 || p == 0) throw std::invalid_argument("cross_correlation: empty input");
  RecoveryScore score;
  score.per_column_mu.resize(p, 0.0);
  double sum = 0.0;
  for (Eigen::Index l = 0; l < p; ++l) {
    const T mean_true = x_true.col(l).sum() / static_cast<double>(n);
    const T mean_hat = x_hat.col(l).sum() / static_cast<double>(n);
    T dot = T(0);
    double norm_true = 0.0, norm_hat = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const T a = x_true(i, l) - mean_true;
      const T b = x_hat(i, l) - mean_hat;
      dot += FieldTraits<T>::conj(a) * b;
      norm_true += abs2(a);
      norm_hat += abs2(b);
    }
    double mu_l = 0.0;
    if (norm_true > 0.0 && norm_hat > 0.0) {
      mu_l = std::sqrt(abs2(dot) / (norm_true * norm_hat));
      mu_l = std::min(mu_l, 1.0);
    } else {
      score.degenerate_column = true;
    }
    score.per_column_mu[l] = mu_l;
    sum += mu_l;
  }
  score.mu = sum / static_cast<double>(p);
  score.log10_gap = std::log10(std::max(1.0 - score.mu, 1e-300));
  score.mse = mse(x_true, x_hat);
  return score;
}

// Residual gain error after the best global complex scale, diagnostic only.
template <class T>
double gain_mse_up_to_scale(const VecX<T>& d_true, const VecX<T>& d_hat) {
  if (d_true.size() != d_hat.size())
    throw std::invalid_argument("gain_mse_up_to_scale: shape mismatch");
  const double denom = d_hat.squaredNorm();
  if (!(denom > 0.0)) return d_true.squaredNorm() / static_cast<double>(d_true.size());
  T scale = T(0);
  for (Eigen::Index i = 0; i < d_hat.size(); ++i)
    scale += FieldTraits<T>::conj(d_hat(i)) * d_true(i);
  scale = scale / denom;
  double err = 0.0;
  for (Eigen::Index i = 0; i < d_hat.size(); ++i) err += abs2(T(d_true(i) - scale * d_hat(i)));
  return err / static_cast<double>(d_true.size());
}

}  // namespace calamp
