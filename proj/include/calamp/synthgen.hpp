#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "calamp/descriptors.hpp"
#include "calamp/matrix.hpp"
#include "calamp/priors.hpp"
#include "calamp/rng.hpp"

namespace calamp {

namespace rng_streams {
inline constexpr std::uint64_t kMatrix = 1;
inline constexpr std::uint64_t kSignal = 2;
inline constexpr std::uint64_t kGains = 3;
inline constexpr std::uint64_t kNoise = 4;
}  // namespace rng_streams

struct InstanceParams {
  int n = 1000;
  int m = 500;
  int p = 1;
  SignalPriorDescriptor prior;
  ChannelDescriptor channel;
  std::uint64_t seed = 1;

  double alpha() const { return static_cast<double>(m) / n; }
};

template <class T>
struct ProblemInstance {
  InstanceParams params;
  MatX<T> mixing;        // M x N, iid entries of variance 1/N
  MatX<T> signal;        // N x P ground truth
  VecX<T> gains;         // per-sensor distortion parameter (0 = faulty sensor)
  MatX<T> observations;  // M x P
};

namespace detail {

template <class T>
T draw_gauss_entry(Rng& rng, double var);

template <>
inline double draw_gauss_entry<double>(Rng& rng, double var) {
  return rng.next_gauss(0.0, var);
}

template <>
inline std::complex<double> draw_gauss_entry<std::complex<double>>(Rng& rng, double var) {
  return rng.next_complex_gauss(var);
}

}  // namespace detail

// iid Gaussian measurement matrix with entry variance 1/N (complex: circular,
// total variance 1/N) so rows of F x stay O(1).
template <class T>
MatX<T> gen_matrix(int m, int n, Rng rng) {
  if (m < 1 || n < 1) throw std::invalid_argument("gen_matrix: m, n must be >= 1");
  MatX<T> f(m, n);
  const double var = 1.0 / n;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) f(i, j) = detail::draw_gauss_entry<T>(rng, var);
  return f;
}

template <class T>
MatX<T> gen_signal(int n, int p, const BernoulliGaussPrior& prior, Rng rng) {
  MatX<T> x(n, p);
  for (int l = 0; l < p; ++l)
    for (int i = 0; i < n; ++i) x(i, l) = prior.template sample<T>(rng);
  return x;
}

template <class T>
struct Observation {
  MatX<T> y;
  VecX<T> gains;
  MatX<T> z;  // noiseless projections, kept for diagnostics
};

// Push z = F x through the channel. Faulty sensors are chosen per sensor and
// overwrite the entire row with iid noise; gain sensors divide by a gain
// drawn from the nominal (uninflated) prior.
template <class T>
Observation<T> gen_observation(const MatX<T>& mixing, const MatX<T>& signal,
                               const ChannelDescriptor& channel, double signal_prior_var,
                               Rng gains_rng, Rng noise_rng) {
  channel.validate();
  const Eigen::Index m = mixing.rows();
  const Eigen::Index p = signal.cols();
  Observation<T> out;
  out.z = mixing * signal;
  out.y = out.z;
  out.gains = VecX<T>::Ones(m);

  switch (channel.type) {
    case ChannelType::kFaulty: {
      if constexpr (FieldTraits<T>::is_complex) {
        throw std::invalid_argument("faulty channel supports the real field only");
      } else {
        const double noise_var = channel.noise_var.value_or(signal_prior_var);
        for (Eigen::Index mu = 0; mu < m; ++mu) {
          if (gains_rng.next_double() < channel.epsilon) {
            out.gains(mu) = 0.0;
            for (Eigen::Index l = 0; l < p; ++l)
              out.y(mu, l) = noise_rng.next_gauss(channel.noise_mean, noise_var);
          }
        }
      }
      break;
    }
    case ChannelType::kRealGain:
    case ChannelType::kComplexGain:
    case ChannelType::kCalibrated: {
      for (Eigen::Index mu = 0; mu < m; ++mu) {
        T d;
        if (channel.type == ChannelType::kCalibrated) {
          d = T(channel.calibrated_gain);
        } else if constexpr (FieldTraits<T>::is_complex) {
          do {
            d = ComplexNormalGainPrior(channel.complex_gain_variance).sample(gains_rng);
          } while (abs2(d) < 1e-24);
        } else {
          UniformGainPrior prior(channel.gain_width, channel.gain_inflation);
          do {
            d = prior.sample(gains_rng);
          } while (abs2(d) < 1e-24);
        }
        out.gains(mu) = d;
        for (Eigen::Index l = 0; l < p; ++l) {
          T w = T(0);
          if (channel.delta > 0.0) w = detail::draw_gauss_entry<T>(noise_rng, channel.delta);
          out.y(mu, l) = (out.z(mu, l) + w) / d;
        }
      }
      break;
    }
  }
  return out;
}

template <class T>
ProblemInstance<T> generate_instance(const InstanceParams& params) {
  params.prior.validate();
  params.channel.validate();
  if constexpr (FieldTraits<T>::is_complex) {
    if (params.channel.type == ChannelType::kFaulty ||
        params.channel.type == ChannelType::kRealGain)
      throw std::invalid_argument("channel requires the real field");
  } else {
    if (params.channel.type == ChannelType::kComplexGain)
      throw std::invalid_argument("channel requires the complex field");
  }
  const Rng root(params.seed);
  ProblemInstance<T> inst;
  inst.params = params;
  inst.mixing = gen_matrix<T>(params.m, params.n, root.stream(rng_streams::kMatrix));
  const BernoulliGaussPrior prior(params.prior.rho, params.prior.sigma2);
  inst.signal = gen_signal<T>(params.n, params.p, prior, root.stream(rng_streams::kSignal));
  Observation<T> obs =
      gen_observation(inst.mixing, inst.signal, params.channel, prior.prior_variance(),
                      root.stream(rng_streams::kGains), root.stream(rng_streams::kNoise));
  inst.observations = std::move(obs.y);
  inst.gains = std::move(obs.gains);
  return inst;
}

}  // namespace calamp
