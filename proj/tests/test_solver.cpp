#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "calamp/channels.hpp"
#include "calamp/metrics.hpp"
#include "calamp/solver.hpp"
#include "calamp/synthgen.hpp"

namespace {

using namespace calamp;

InstanceParams calibrated_params(int n, double alpha, int p, double rho, std::uint64_t seed) {
  InstanceParams params;
  params.n = n;
  params.m = std::max(1, static_cast<int>(std::lround(alpha * n)));
  params.p = p;
  params.prior.rho = rho;
  params.channel.type = ChannelType::kCalibrated;
  params.seed = seed;
  return params;
}

TEST(Initialize, MatchesStartingScheme) {
  const InstanceParams params = calibrated_params(40, 0.8, 3, 0.2, 5);
  const auto inst = generate_instance<double>(params);
  const BernoulliGaussPrior prior(0.2, 1.0);
  const auto s = initialize(params.n, inst.observations, prior);
  EXPECT_TRUE(s.x_hat.isZero(0.0));
  EXPECT_TRUE((s.x_var.array() == 0.2).all());
  EXPECT_TRUE(s.p_hat == inst.observations);
  EXPECT_TRUE(s.z_hat == inst.observations);
  EXPECT_TRUE((s.p_var.array() == 1.0).all());
  EXPECT_TRUE((s.z_var.array() == 1.0).all());
}

TEST(Damping, UnitBetaIsIdentity) {
  EXPECT_DOUBLE_EQ(damp_variance(0.37, 5.0, 1.0), 0.37);
  EXPECT_DOUBLE_EQ(damp_mean(0.37, 5.0, 1.0), 0.37);
}

TEST(Damping, EqualVariancesContractByFormula) {
  // 1/var = beta/v + (1-beta)/(beta v) gives var = beta v / (1 - beta + beta^2).
  const double v = 1.7, beta = 0.8;
  EXPECT_NEAR(damp_variance(v, v, beta), beta * v / (1.0 - beta + beta * beta), 1e-15);
  EXPECT_NEAR(damp_variance(v, v, beta) / v, 0.95238095238095233, 1e-12);
}

TEST(Damping, VanishingWeightKeepsOldMean) {
  EXPECT_DOUBLE_EQ(damp_mean(123.0, -4.0, 0.0), -4.0);
}

TEST(Solve, EasyCompressedSensingRecovers) {
  const InstanceParams params = calibrated_params(400, 1.0, 1, 0.1, 42);
  const auto inst = generate_instance<double>(params);
  const BernoulliGaussPrior prior(0.1, 1.0);
  CalibratedChannel<double> channel(params.channel.delta,
                                    std::vector<double>(params.m, 1.0));
  SolverConfig cfg;
  cfg.beta = 1.0;
  const auto res = solve<double>(inst.mixing, inst.observations, prior, channel, cfg);
  EXPECT_TRUE(res.converged);
  EXPECT_GT(cross_correlation(inst.signal, res.x_hat).mu, 1.0 - 1e-8);
}

TEST(Solve, ZeroObservationsGiveZeroEstimate) {
  const InstanceParams params = calibrated_params(60, 0.7, 2, 0.25, 7);
  auto inst = generate_instance<double>(params);
  inst.observations.setZero();
  const BernoulliGaussPrior prior(0.25, 1.0);
  CalibratedChannel<double> channel(params.channel.delta,
                                    std::vector<double>(params.m, 1.0));
  SolverConfig cfg;
  cfg.beta = 1.0;
  const auto res = solve<double>(inst.mixing, inst.observations, prior, channel, cfg);
  EXPECT_LT(res.x_hat.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Solve, ConvergedStateIsFixedPoint) {
  const InstanceParams params = calibrated_params(150, 1.2, 1, 0.15, 3);
  const auto inst = generate_instance<double>(params);
  const BernoulliGaussPrior prior(0.15, 1.0);
  CalibratedChannel<double> channel(params.channel.delta,
                                    std::vector<double>(params.m, 1.0));
  SolverConfig cfg;
  cfg.beta = 1.0;
  cfg.tol = 1e-12;
  const auto res = solve<double>(inst.mixing, inst.observations, prior, channel, cfg);
  ASSERT_TRUE(res.converged);
  // Re-run the converged state through one more undamped sweep.
  SolverState<double> s = initialize(params.n, inst.observations, prior);
  const MatXd F2 = inst.mixing.array().abs2().matrix();
  for (int t = 0; t < res.iterations; ++t)
    iterate(s, inst.mixing, F2, inst.observations, prior, channel, cfg);
  const auto diag = iterate(s, inst.mixing, F2, inst.observations, prior, channel, cfg);
  EXPECT_LT(diag.mean_delta2, 10.0 * cfg.tol);
}

TEST(Solve, DivergenceIsReportedNotRepaired) {
  const InstanceParams params = calibrated_params(50, 0.8, 1, 0.2, 9);
  auto inst = generate_instance<double>(params);
  inst.observations(0, 0) = std::numeric_limits<double>::infinity();
  const BernoulliGaussPrior prior(0.2, 1.0);
  CalibratedChannel<double> channel(params.channel.delta,
                                    std::vector<double>(params.m, 1.0));
  SolverConfig cfg;
  const auto res = solve<double>(inst.mixing, inst.observations, prior, channel, cfg);
  EXPECT_TRUE(res.diverged);
  EXPECT_FALSE(res.converged);
  EXPECT_FALSE(res.divergence_note.empty());
  EXPECT_TRUE(res.x_hat.allFinite());
}

TEST(Solve, VariancePositivityAcrossIterations) {
  const InstanceParams params = calibrated_params(80, 0.5, 2, 0.3, 11);
  const auto inst = generate_instance<double>(params);
  const BernoulliGaussPrior prior(0.3, 1.0);
  CalibratedChannel<double> channel(params.channel.delta,
                                    std::vector<double>(params.m, 1.0));
  SolverConfig cfg;
  SolverState<double> s = initialize(params.n, inst.observations, prior);
  const MatXd F2 = inst.mixing.array().abs2().matrix();
  for (int t = 0; t < 40; ++t) {
    iterate(s, inst.mixing, F2, inst.observations, prior, channel, cfg);
    EXPECT_GE(s.x_var.minCoeff(), 0.0);
    EXPECT_GE(s.p_var.minCoeff(), 0.0);
    EXPECT_GE(s.z_var.minCoeff(), 0.0);
    EXPECT_GT(s.r_var.minCoeff(), 0.0);
  }
}

TEST(Solve, GainRecoveryAtModerateRate) {
  InstanceParams params;
  params.n = 400;
  params.m = 260;  // alpha = 0.65
  params.p = 4;
  params.prior.rho = 0.2;
  params.channel.type = ChannelType::kRealGain;
  params.channel.delta = 1e-15;
  params.channel.gain_width = 1.0;
  params.seed = 2024;
  const auto inst = generate_instance<double>(params);
  const BernoulliGaussPrior prior(0.2, 1.0);
  const RealGainChannel channel(params.channel.delta, UniformGainPrior(1.0, 1.1));
  SolverConfig cfg;  // beta 0.8
  const auto res = solve<double>(inst.mixing, inst.observations, prior, channel, cfg);
  const auto score = cross_correlation(inst.signal, res.x_hat);
  EXPECT_GT(score.mu, 1.0 - 1e-5);
  ASSERT_TRUE(res.has_gain_estimates);
  EXPECT_LT(gain_mse_up_to_scale<double>(inst.gains, res.d_hat), 1e-6);
}

TEST(Solve, PointMassGainDecouplesSamples) {
  // With per-sensor gains known, the P-sample solve must perform exactly the
  // arithmetic of P single-sample solves.
  InstanceParams params = calibrated_params(120, 0.8, 3, 0.2, 33);
  params.channel.calibrated_gain = 1.1;
  const auto inst = generate_instance<double>(params);
  const BernoulliGaussPrior prior(0.2, 1.0);
  const GainChannel<double, PointMassGainPrior> channel(params.channel.delta,
                                                        PointMassGainPrior{1.1});
  SolverConfig cfg;
  cfg.t_max = 60;
  const auto joint = solve<double>(inst.mixing, inst.observations, prior, channel, cfg);
  for (int l = 0; l < params.p; ++l) {
    const MatX<double> y_col = inst.observations.col(l);
    const auto single = solve<double>(inst.mixing, y_col, prior, channel, cfg);
    EXPECT_LT((joint.x_hat.col(l) - single.x_hat.col(0)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Solve, ComplexCalibratedRecovers) {
  using Cx = std::complex<double>;
  InstanceParams params = calibrated_params(200, 1.0, 2, 0.15, 77);
  const auto inst = generate_instance<Cx>(params);
  const BernoulliGaussPrior prior(0.15, 1.0);
  CalibratedChannel<Cx> channel(params.channel.delta,
                                std::vector<Cx>(params.m, Cx(1.0, 0.0)));
  SolverConfig cfg;
  cfg.beta = 1.0;
  const auto res = solve<Cx>(inst.mixing, inst.observations, prior, channel, cfg);
  EXPECT_GT(cross_correlation(inst.signal, res.x_hat).mu, 1.0 - 1e-7);
}

}  // namespace
