#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "calamp/gauss.hpp"
#include "calamp/incomplete_gamma.hpp"
#include "calamp/oracles.hpp"
#include "calamp/quadrature.hpp"
#include "calamp/rng.hpp"
#include "calamp/signed_log.hpp"
#include "calamp/truncated_moments.hpp"

namespace {

using namespace calamp;

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(GaussPdf, StandardNormalAtMode) {
  EXPECT_NEAR(gauss_pdf(0.0, 0.0, 1.0), 0.39894228040143268, 1e-15);
}

TEST(GaussPdf, PeakValue) {
  for (double var : {0.1, 1.0, 7.5}) {
    for (double mean : {-2.0, 0.0, 3.0}) {
      EXPECT_DOUBLE_EQ(gauss_pdf(mean, mean, var), 1.0 / std::sqrt(kTwoPi * var));
    }
  }
}

TEST(GaussPdf, DirectFormulaAndNormalization) {
  // exp(-1/4) / sqrt(4 pi)
  EXPECT_NEAR(gauss_pdf(1.0, 0.0, 2.0), std::exp(-0.25) / std::sqrt(2.0 * kTwoPi), 1e-16);
  const double mass =
      integrate([](double x) { return gauss_pdf(x, 0.7, 2.0); }, 0.7 - 20.0, 0.7 + 20.0);
  EXPECT_NEAR(mass, 1.0, 1e-12);
}

TEST(GaussPdf, ComplexConventionIntegratesToOne) {
  // Circular complex density with E|x|^2 = var factorizes into two real
  // axes of variance var / 2.
  const std::complex<double> mean(0.4, -0.3);
  const double var = 1.7;
  const double axis = integrate(
      [&](double u) { return std::exp(-u * u / var); }, -20.0, 20.0);
  EXPECT_NEAR(axis * axis / (0.5 * kTwoPi * var), 1.0, 1e-12);
  EXPECT_NEAR(gauss_pdf(mean, mean, var), 1.0 / (0.5 * kTwoPi * var), 1e-15);
}

TEST(GaussPdf, RejectsNonpositiveVariance) {
  EXPECT_THROW(gauss_pdf(0.0, 0.0, 0.0), std::domain_error);
  EXPECT_THROW(gauss_pdf(0.0, 0.0, -1.0), std::domain_error);
}

TEST(IncompleteGamma, ClosedFormAtOne) {
  // gamma(1, x) = 1 - exp(-x)
  EXPECT_NEAR(lower_incomplete_gamma(1.0, 1.0), 1.0 - std::exp(-1.0), 1e-14);
  EXPECT_NEAR(lower_incomplete_gamma(1.0, 3.5), 1.0 - std::exp(-3.5), 1e-14);
}

TEST(IncompleteGamma, EmptyIntegral) {
  for (double s : {0.5, 1.0, 4.2}) EXPECT_DOUBLE_EQ(lower_incomplete_gamma(s, 0.0), 0.0);
}

TEST(IncompleteGamma, MatchesQuadrature) {
  const double want = integrate([](double t) { return std::pow(t, 1.5) * std::exp(-t); },
                                1e-12, 3.0, 1e-13);
  EXPECT_NEAR(lower_incomplete_gamma(2.5, 3.0) / want, 1.0, 1e-10);
}

TEST(IncompleteGamma, MonotoneAndNormalized) {
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const double s = 0.2 + 6.0 * rng.next_double();
    const double x1 = 8.0 * rng.next_double();
    const double x2 = x1 + 4.0 * rng.next_double();
    const double g1 = lower_incomplete_gamma(s, x1);
    const double g2 = lower_incomplete_gamma(s, x2);
    EXPECT_LE(g1, g2 * (1.0 + 1e-14));
    const double p = std::exp(log_gamma_p(s, x2));
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0 + 1e-14);
  }
  EXPECT_THROW(lower_incomplete_gamma(0.0, 1.0), std::domain_error);
  EXPECT_THROW(lower_incomplete_gamma(-2.0, 1.0), std::domain_error);
}

TEST(IncompleteGamma, TailLogsStayFinite) {
  const double lq = log_gamma_q(0.5, 3600.0);
  EXPECT_TRUE(std::isfinite(lq));
  EXPECT_LT(lq, -3500.0);
  EXPECT_NEAR(std::exp(log_gamma_p(0.5, 3600.0)), 1.0, 1e-14);
}

TEST(SignedLog, Arithmetic) {
  const SignedLog a = SignedLog::from_value(3.0);
  const SignedLog b = SignedLog::from_value(-2.0);
  EXPECT_NEAR((a + b).value(), 1.0, 1e-14);
  EXPECT_NEAR((a * b).value(), -6.0, 1e-14);
  EXPECT_NEAR((a / b).value(), -1.5, 1e-14);
  EXPECT_TRUE((a - a).is_zero());
  EXPECT_NEAR((a - b).value(), 5.0, 1e-14);
  EXPECT_TRUE(SignedLog::from_value(0.0).is_zero());
}

TEST(PowerGaussIntegral, UntruncatedMeanIsGaussianMean) {
  for (double mean : {-2.3, 0.5, 4.0}) {
    for (double var : {0.03, 1.0, 9.0}) {
      const SignedLog i0 = power_gauss_integral(0, mean, var, -kInf, kInf);
      const SignedLog i1 = power_gauss_integral(1, mean, var, -kInf, kInf);
      EXPECT_NEAR((i1 / i0).value(), mean, 1e-12 * (1.0 + std::fabs(mean)));
      // I(0) = sqrt(2 pi var)
      EXPECT_NEAR(std::exp(i0.log_mag), std::sqrt(kTwoPi * var), 1e-12 * std::sqrt(var));
    }
  }
}

TEST(PowerGaussIntegral, GaussianMassIdentity) {
  Rng rng(17);
  for (int k = 0; k < 100; ++k) {
    const double mean = 4.0 * (rng.next_double() - 0.5);
    const double var = 0.05 + 3.0 * rng.next_double();
    const double a = mean - 4.0 + 6.0 * rng.next_double();
    const double b = a + 0.2 + 4.0 * rng.next_double();
    const SignedLog i0 = power_gauss_integral(0, mean, var, a, b);
    const double sd = std::sqrt(var);
    const double want = gauss_cdf((b - mean) / sd) - gauss_cdf((a - mean) / sd);
    EXPECT_NEAR(i0.value() / std::sqrt(kTwoPi * var), want, 1e-12);
  }
}

TEST(PowerGaussIntegral, TruncatedRatioMatchesQuadrature) {
  const SignedLog i2 = power_gauss_integral(2, 1.0, 0.01, 0.5, 1.5);
  const SignedLog i3 = power_gauss_integral(3, 1.0, 0.01, 0.5, 1.5);
  auto w = [](double t, int n) { return std::pow(t, n) * std::exp(-(t - 1.0) * (t - 1.0) / 0.02); };
  const double q2 = integrate([&](double t) { return w(t, 2); }, 0.5, 1.5, 1e-13);
  const double q3 = integrate([&](double t) { return w(t, 3); }, 0.5, 1.5, 1e-13);
  EXPECT_NEAR((i3 / i2).value() / (q3 / q2), 1.0, 1e-8);
}

TEST(PowerGaussIntegral, LargePowersStayFinite) {
  // The binomial-gamma coefficients overflow doubles long before n = 40;
  // ratios must still come out right.
  const int n = 40;
  const SignedLog lo = power_gauss_integral(n, 1.2, 0.01, 0.5, 1.5);
  const SignedLog hi = power_gauss_integral(n + 1, 1.2, 0.01, 0.5, 1.5);
  const double ratio = (hi / lo).value();
  EXPECT_GT(ratio, 1.2);
  EXPECT_LT(ratio, 1.5);
  EXPECT_TRUE(std::isfinite(lo.log_mag));
}

TEST(PowerGaussIntegral, RescalingInvariantRatios) {
  // Two independent normalizations of the same moments: the signed-log
  // bracket route and the peak-scaled needle quadrature.
  Rng rng(23);
  for (int k = 0; k < 60; ++k) {
    const int n = 1 + static_cast<int>(rng.next_double() * 5);
    const double mean = 1.0 + 3.0 * (rng.next_double() - 0.5);
    const double var = std::pow(10.0, -3.0 + 3.0 * rng.next_double());
    const double a = 0.3, b = 1.7;
    const TruncatedPowerMoments m1 = truncated_power_gauss_moments(n, mean, var, a, b);
    const detail::ScaledNeedleMoments m2 = detail::power_gauss_needle_moments(n, mean, var, a, b);
    ASSERT_FALSE(m1.zero_evidence);
    ASSERT_FALSE(m2.empty);
    EXPECT_NEAR(m1.mean, m2.center + m2.j1 / m2.j0, 1e-8 * (1.0 + std::fabs(m1.mean)));
  }
}

TEST(FMoments, ConstantWeightGivesGaussianMoments) {
  auto one = [](double) { return 0.0; };
  const OracleMoments m = f_moments(one, 0.8, 1.7);
  EXPECT_NEAR(m.mean, 0.8, 1e-10);
  EXPECT_NEAR(m.variance, 1.7, 1e-9);
}

TEST(FMoments, GaussianWeightGivesPosteriorMoments) {
  // weight N(x; 0, 1): mean R/(Sigma+1), variance Sigma/(Sigma+1)
  auto w = [](double x) { return log_gauss_pdf(x, 0.0, 1.0); };
  for (double mean : {-1.5, 0.3}) {
    for (double var : {0.2, 2.0}) {
      const OracleMoments m = f_moments(w, mean, var);
      EXPECT_NEAR(m.mean, mean / (var + 1.0), 1e-10);
      EXPECT_NEAR(m.variance, var / (var + 1.0), 1e-9);
    }
  }
}

TEST(FMoments, ZeroEvidenceFlagged) {
  auto nothing = [](double) { return -std::numeric_limits<double>::infinity(); };
  EXPECT_TRUE(f_moments(nothing, 0.0, 1.0, -1.0, 1.0).zero_evidence);
}

TEST(DerivativeIdentity, ConstantWeight) {
  auto one = [](double) { return 0.0; };
  const double var = 0.9;
  auto update = [&](double r) {
    const OracleMoments m = f_moments(one, r, var);
    return std::pair<double, double>(m.mean, m.variance);
  };
  EXPECT_LT(mean_derivative_residual<double>(update, 0.4, var, 1e-5), 1e-8);
}

TEST(DerivativeIdentity, GaussianWeight) {
  auto w = [](double x) { return log_gauss_pdf(x, 0.0, 1.0); };
  const double var = 0.5;
  auto update = [&](double r) {
    const OracleMoments m = f_moments(w, r, var);
    return std::pair<double, double>(m.mean, m.variance);
  };
  EXPECT_LT(mean_derivative_residual<double>(update, 0.3, var, 1e-5), 1e-6);
}

}  // namespace
