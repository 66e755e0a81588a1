#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "calamp/sweep.hpp"

namespace {

using namespace calamp;

SweepConfig small_config() {
  SweepConfig cfg;
  cfg.n = 120;
  cfg.rho_grid = {0.1, 0.3};
  cfg.alpha_grid = {0.3, 0.8};
  cfg.p_list = {1};
  cfg.instances_per_cell = 2;
  cfg.master_seed = 99;
  cfg.channel.type = ChannelType::kCalibrated;
  cfg.prior.rho = 0.1;  // per-cell rho overrides this
  cfg.solver.beta = 1.0;
  cfg.solver.t_max = 150;
  return cfg;
}

TEST(SweepConfig, ValidationRejectsBadGrids) {
  SweepConfig cfg = small_config();
  cfg.rho_grid = {};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.alpha_grid = {0.5, 0.5};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.instances_per_cell = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_THROW(run_sweep(cfg), std::invalid_argument);  // fails before any solve
}

TEST(SweepConfig, JsonRoundTripAndStrictness) {
  const SweepConfig cfg = small_config();
  const json j = to_json(cfg);
  const SweepConfig back = sweep_from_json(j);
  EXPECT_EQ(back.n, cfg.n);
  EXPECT_EQ(back.rho_grid, cfg.rho_grid);
  EXPECT_EQ(back.alpha_grid, cfg.alpha_grid);
  EXPECT_EQ(back.master_seed, cfg.master_seed);
  EXPECT_EQ(back.channel.type, cfg.channel.type);

  json unknown = j;
  unknown["surprise"] = 1;
  EXPECT_THROW(sweep_from_json(unknown), std::invalid_argument);
  json no_version = j;
  no_version.erase("schema_version");
  EXPECT_THROW(sweep_from_json(no_version), std::invalid_argument);
  json bad_version = j;
  bad_version["schema_version"] = 999;
  EXPECT_THROW(sweep_from_json(bad_version), std::invalid_argument);
}

TEST(ChannelJson, RoundTripAllVariants) {
  ChannelDescriptor faulty;
  faulty.type = ChannelType::kFaulty;
  faulty.epsilon = 0.25;
  faulty.noise_mean = 0.1;
  const ChannelDescriptor faulty_back = channel_from_json(to_json(faulty));
  EXPECT_EQ(faulty_back.type, ChannelType::kFaulty);
  EXPECT_DOUBLE_EQ(faulty_back.epsilon, 0.25);
  EXPECT_FALSE(faulty_back.noise_var.has_value());  // auto: rho * sigma2

  ChannelDescriptor gain;
  gain.type = ChannelType::kRealGain;
  gain.gain_width = 0.7;
  gain.gain_inflation = 1.2;
  gain.delta = 1e-10;
  const ChannelDescriptor gain_back = channel_from_json(to_json(gain));
  EXPECT_DOUBLE_EQ(gain_back.gain_width, 0.7);
  EXPECT_DOUBLE_EQ(gain_back.gain_inflation, 1.2);
  EXPECT_DOUBLE_EQ(gain_back.delta, 1e-10);

  ChannelDescriptor cgain;
  cgain.type = ChannelType::kComplexGain;
  cgain.complex_gain_variance = 5.0;
  EXPECT_DOUBLE_EQ(channel_from_json(to_json(cgain)).complex_gain_variance, 5.0);

  ChannelDescriptor calib;
  calib.type = ChannelType::kCalibrated;
  calib.calibrated_gain = 1.4;
  EXPECT_DOUBLE_EQ(channel_from_json(to_json(calib)).calibrated_gain, 1.4);

  EXPECT_THROW(channel_from_json(json{{"variant", "nonsense"}}), std::invalid_argument);
  EXPECT_THROW(channel_from_json(json{{"variant", "gain"}, {"typo", 1}}),
               std::invalid_argument);
}

TEST(Sweep, DeterministicAcrossWorkerCounts) {
  SweepConfig cfg = small_config();
  cfg.workers = 1;
  const auto one = run_sweep(cfg);
  cfg.workers = 4;
  const auto four = run_sweep(cfg);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_DOUBLE_EQ(one[i].mu, four[i].mu);
    EXPECT_EQ(one[i].seed, four[i].seed);
    EXPECT_EQ(one[i].iters, four[i].iters);
    EXPECT_EQ(one[i].success, four[i].success);
  }
}

TEST(Sweep, SeedDerivationIsPositional) {
  const std::uint64_t a = cell_seed(1, 0, 0, 1, 0);
  EXPECT_EQ(a, cell_seed(1, 0, 0, 1, 0));
  EXPECT_NE(a, cell_seed(1, 1, 0, 1, 0));
  EXPECT_NE(a, cell_seed(1, 0, 1, 1, 0));
  EXPECT_NE(a, cell_seed(1, 0, 0, 2, 0));
  EXPECT_NE(a, cell_seed(1, 0, 0, 1, 1));
  EXPECT_NE(a, cell_seed(2, 0, 0, 1, 0));
}

TEST(Sweep, CsvRoundTripBitExact) {
  SweepConfig cfg = small_config();
  cfg.workers = 2;
  const auto records = run_sweep(cfg);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string p1 = dir / "calamp_results_1.csv";
  const std::string p2 = dir / "calamp_results_2.csv";
  write_results_csv(p1, records);
  write_results_csv(p2, read_results_csv(p1));
  std::ifstream f1(p1), f2(p2);
  const std::string s1((std::istreambuf_iterator<char>(f1)), {});
  const std::string s2((std::istreambuf_iterator<char>(f2)), {});
  EXPECT_EQ(s1, s2);
  EXPECT_EQ(s1.substr(0, s1.find('\n')), std::string(kResultsCsvHeader));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST(Sweep, SummaryHasCellsAndBounds) {
  SweepConfig cfg = small_config();
  cfg.p_list = {2};
  cfg.workers = 2;
  const auto records = run_sweep(cfg);
  const json summary = summarize_sweep(cfg, records);
  EXPECT_EQ(summary["cells"].size(), 4u);
  for (const auto& cell : summary["cells"]) {
    EXPECT_EQ(cell["instances"].get<int>(), 2);
    const double f = cell["success_fraction"].get<double>();
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
  EXPECT_TRUE(summary["bounds"].contains("alpha_min_P2"));
}

TEST(Sweep, ResolveWorkersHonorsEnv) {
  setenv("CALAMP_THREADS", "3", 1);
  EXPECT_EQ(resolve_workers(0), 3);
  EXPECT_EQ(resolve_workers(5), 5);  // explicit config wins
  unsetenv("CALAMP_THREADS");
  EXPECT_GE(resolve_workers(0), 1);
}

}  // namespace
