#pragma once

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "calamp/channels.hpp"
#include "calamp/metrics.hpp"
#include "calamp/solver.hpp"
#include "calamp/synthgen.hpp"

namespace calamp {

// Counting bound for blind gain calibration: an oracle knowing the signal
// supports still needs M (P - 1) >= P rho N independent equations.
inline double alpha_min(double rho, int p) {
  if (p < 2) throw std::domain_error("alpha_min: undefined for p < 2");
  if (!(rho > 0.0) || rho > 1.0) throw std::domain_error("alpha_min: rho must be in (0, 1]");
  return rho * static_cast<double>(p) / (p - 1);
}

struct BoundCurve {
  std::string kind;
  std::vector<std::pair<double, double>> samples;  // (rho, alpha)
};

inline BoundCurve alpha_min_curve(const std::vector<double>& rho_grid, int p) {
  BoundCurve curve;
  curve.kind = "alpha_min(P=" + std::to_string(p) + ")";
  double prev = 0.0;
  for (double rho : rho_grid) {
    const double a = alpha_min(rho, p);
    if (!(a > rho)) throw std::logic_error("alpha_min curve: bound must exceed rho");
    if ((a < 1.0) != (rho < static_cast<double>(p - 1) / p))
      throw std::logic_error("alpha_min curve: sub-unit range inconsistent");
    if (a < prev) throw std::logic_error("alpha_min curve: must be nondecreasing");
    prev = a;
    curve.samples.emplace_back(rho, a);
  }
  return curve;
}

// Perfectly calibrated reference transitions: the gain problem keeps the CS
// curve, the faulty problem inflates it by the discarded sensor fraction.
inline BoundCurve alpha_cal_gain_curve(const BoundCurve& alpha_cs) {
  BoundCurve curve = alpha_cs;
  curve.kind = "alpha_cal(gain)";
  return curve;
}

inline BoundCurve alpha_cal_faulty_curve(const BoundCurve& alpha_cs, double epsilon) {
  if (epsilon < 0.0 || epsilon >= 1.0)
    throw std::domain_error("alpha_cal_faulty_curve: epsilon must be in [0, 1)");
  BoundCurve curve;
  curve.kind = "alpha_cal(faulty,eps=" + std::to_string(epsilon) + ")";
  for (const auto& [rho, a] : alpha_cs.samples)
    curve.samples.emplace_back(rho, a / (1.0 - epsilon));
  return curve;
}

// Empirical CS transition at one rho: bisection over alpha with the
// perfectly calibrated channel, success meaning every seed recovers the
// signal past the harness threshold. Nothing in the literature pins these
// values for this implementation, so they are always measured, never quoted.
inline double estimate_alpha_cs(double rho, int n, int num_seeds = 3,
                                double resolution = 0.02, std::uint64_t seed_base = 1234,
                                const SolverConfig& solver = {1.0, 300, 1e-12, 1e-12}) {
  auto succeeds = [&](double alpha) {
    for (int s = 0; s < num_seeds; ++s) {
      InstanceParams params;
      params.n = n;
      params.m = std::max(1, static_cast<int>(std::lround(alpha * n)));
      params.p = 1;
      params.prior.rho = rho;
      params.channel.type = ChannelType::kCalibrated;
      params.seed = Rng::mix(seed_base, Rng::mix(static_cast<std::uint64_t>(s + 1),
                                                 static_cast<std::uint64_t>(rho * 1e6)));
      const auto inst = generate_instance<double>(params);
      CalibratedChannel<double> channel(params.channel.delta,
                                        std::vector<double>(params.m, 1.0));
      const BernoulliGaussPrior prior(rho, params.prior.sigma2);
      const auto res = solve<double>(inst.mixing, inst.observations, prior, channel, solver);
      if (!cross_correlation(inst.signal, res.x_hat).success()) return false;
    }
    return true;
  };
  double lo = rho;  // certain failure: below the counting bound
  double hi = 1.0;
  if (!succeeds(hi)) return 1.0;
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (succeeds(mid) ? hi : lo) = mid;
  }
  return hi;
}

inline constexpr const char* kAlphaCsCacheHeader = "# calamp-alpha-cs-v1";

inline void write_curve_csv(const std::string& path, const BoundCurve& curve,
                            const std::string& file_header = "") {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  if (!file_header.empty()) out << file_header << "\n";
  out << "rho,alpha\n";
  out.precision(17);
  for (const auto& [rho, a] : curve.samples) out << rho << "," << a << "\n";
}

inline BoundCurve read_alpha_cs_cache(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != kAlphaCsCacheHeader) throw std::runtime_error("not an alpha_cs cache: " + path);
  std::getline(in, line);  // column header
  BoundCurve curve;
  curve.kind = "alpha_cs(empirical)";
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("malformed cache line: " + line);
    curve.samples.emplace_back(std::stod(line.substr(0, comma)),
                               std::stod(line.substr(comma + 1)));
  }
  return curve;
}

}  // namespace calamp
