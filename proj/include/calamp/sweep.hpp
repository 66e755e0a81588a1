#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <complex>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "calamp/bounds.hpp"
#include "calamp/config_json.hpp"
#include "calamp/metrics.hpp"
#include "calamp/solver.hpp"
#include "calamp/synthgen.hpp"

namespace calamp {

struct SweepConfig {
  int n = 1000;
  std::vector<double> rho_grid;
  std::vector<double> alpha_grid;
  std::vector<int> p_list;
  int instances_per_cell = 3;
  std::uint64_t master_seed = 1;
  int workers = 0;  // 0: CALAMP_THREADS env or hardware concurrency
  ChannelDescriptor channel;
  SignalPriorDescriptor prior;
  SolverConfig solver;
  std::string output_dir = "out";

  void validate() const {
    auto strictly_increasing = [](const std::vector<double>& g) {
      for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1])) return false;
      return true;
    };
    if (n < 1) throw std::invalid_argument("sweep: n must be >= 1");
    if (rho_grid.empty() || alpha_grid.empty() || p_list.empty())
      throw std::invalid_argument("sweep: empty grid");
    if (!strictly_increasing(rho_grid) || !strictly_increasing(alpha_grid))
      throw std::invalid_argument("sweep: grids must be strictly increasing");
    for (double r : rho_grid)
      if (!(r > 0.0) || r > 1.0) throw std::invalid_argument("sweep: rho out of (0, 1]");
    for (double a : alpha_grid)
      if (!(a > 0.0)) throw std::invalid_argument("sweep: alpha must be positive");
    for (int p : p_list)
      if (p < 1) throw std::invalid_argument("sweep: P must be >= 1");
    if (instances_per_cell < 1)
      throw std::invalid_argument("sweep: instances_per_cell must be >= 1");
    prior.validate();
    channel.validate();
  }
};

struct CellRecord {
  double rho = 0.0;
  double alpha = 0.0;
  int p = 1;
  std::uint64_t seed = 0;
  double mu = 0.0;
  double log10_gap = 0.0;
  bool success = false;
  int iters = 0;
  bool converged = false;
  double wall_ms = 0.0;
};

inline std::uint64_t cell_seed(std::uint64_t master, std::size_t rho_idx, std::size_t alpha_idx,
                               int p, int replicate) {
  std::uint64_t s = Rng::mix(master, rho_idx + 1);
  s = Rng::mix(s, alpha_idx + 1);
  s = Rng::mix(s, static_cast<std::uint64_t>(p));
  return Rng::mix(s, static_cast<std::uint64_t>(replicate) + 1);
}

inline int resolve_workers(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("CALAMP_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

namespace detail {

template <class T>
CellRecord run_cell(const SweepConfig& cfg, double rho, double alpha, int p,
                    std::uint64_t seed) {
  InstanceParams params;
  params.n = cfg.n;
  params.m = std::max(1, static_cast<int>(std::lround(alpha * cfg.n)));
  params.p = p;
  params.prior = cfg.prior;
  params.prior.rho = rho;
  params.channel = cfg.channel;
  params.seed = seed;
  const auto inst = generate_instance<T>(params);
  const BernoulliGaussPrior prior(rho, cfg.prior.sigma2);

  const auto t0 = std::chrono::steady_clock::now();
  SolveResult<T> res;
  switch (cfg.channel.type) {
    case ChannelType::kFaulty:
      if constexpr (!FieldTraits<T>::is_complex) {
        const double noise_var = cfg.channel.noise_var.value_or(rho * cfg.prior.sigma2);
        const FaultyChannel channel(cfg.channel.epsilon, cfg.channel.noise_mean, noise_var);
        res = solve<T>(inst.mixing, inst.observations, prior, channel, cfg.solver);
      }
      break;
    case ChannelType::kRealGain:
      if constexpr (!FieldTraits<T>::is_complex) {
        const RealGainChannel channel(
            cfg.channel.delta,
            UniformGainPrior(cfg.channel.gain_width, cfg.channel.gain_inflation));
        res = solve<T>(inst.mixing, inst.observations, prior, channel, cfg.solver);
      }
      break;
    case ChannelType::kComplexGain:
      if constexpr (FieldTraits<T>::is_complex) {
        const ComplexGainChannel channel(cfg.channel.delta,
                                         ComplexNormalGainPrior(cfg.channel.complex_gain_variance));
        res = solve<T>(inst.mixing, inst.observations, prior, channel, cfg.solver);
      }
      break;
    case ChannelType::kCalibrated: {
      const CalibratedChannel<T> channel(
          cfg.channel.delta, std::vector<T>(params.m, T(cfg.channel.calibrated_gain)));
      res = solve<T>(inst.mixing, inst.observations, prior, channel, cfg.solver);
      break;
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  if (res.x_hat.size() == 0) throw std::logic_error("run_cell: channel/field dispatch failure");

  const RecoveryScore score = cross_correlation(inst.signal, res.x_hat);
  CellRecord rec;
  rec.rho = rho;
  rec.alpha = alpha;
  rec.p = p;
  rec.seed = seed;
  rec.mu = score.mu;
  rec.log10_gap = score.log10_gap;
  rec.success = score.success();
  rec.iters = res.iterations;
  rec.converged = res.converged;
  rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return rec;
}

}  // namespace detail

// Run every (rho, alpha, P, replicate) cell on a bounded worker pool. Cells
// are fully independent: seeds derive from grid indices, so the output is a
// pure function of the config no matter how many workers run. Failures of
// individual cells (divergence, non-convergence) are ordinary records.
inline std::vector<CellRecord> run_sweep(
    const SweepConfig& cfg, const std::function<void(std::size_t, std::size_t)>& progress = {}) {
  cfg.validate();
  struct Item {
    std::size_t rho_idx, alpha_idx;
    int p, rep;
  };
  std::vector<Item> items;
  for (std::size_t ri = 0; ri < cfg.rho_grid.size(); ++ri)
    for (std::size_t ai = 0; ai < cfg.alpha_grid.size(); ++ai)
      for (int p : cfg.p_list)
        for (int rep = 0; rep < cfg.instances_per_cell; ++rep)
          items.push_back({ri, ai, p, rep});

  std::vector<CellRecord> records(items.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  const int workers = std::max(1, std::min<int>(resolve_workers(cfg.workers),
                                                static_cast<int>(items.size())));
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= items.size()) return;
      const Item& it = items[k];
      const double rho = cfg.rho_grid[it.rho_idx];
      const double alpha = cfg.alpha_grid[it.alpha_idx];
      const std::uint64_t seed = cell_seed(cfg.master_seed, it.rho_idx, it.alpha_idx, it.p, it.rep);
      if (cfg.channel.field() == FieldType::kComplex) {
        records[k] = detail::run_cell<std::complex<double>>(cfg, rho, alpha, it.p, seed);
      } else {
        records[k] = detail::run_cell<double>(cfg, rho, alpha, it.p, seed);
      }
      const std::size_t d = done.fetch_add(1) + 1;
      if (progress) progress(d, items.size());
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return records;
}

inline constexpr const char* kResultsCsvHeader =
    "rho,alpha,P,seed,mu,log10_gap,success,iters,converged,wall_ms";

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

// One row per (cell, replicate), sorted for scheduling-independent output.
inline void write_results_csv(const std::string& path, std::vector<CellRecord> records) {
  std::sort(records.begin(), records.end(), [](const CellRecord& a, const CellRecord& b) {
    return std::tie(a.rho, a.alpha, a.p, a.seed) < std::tie(b.rho, b.alpha, b.p, b.seed);
  });
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << kResultsCsvHeader << "\n";
  for (const CellRecord& r : records) {
    out << detail::format_double(r.rho) << ',' << detail::format_double(r.alpha) << ',' << r.p
        << ',' << r.seed << ',' << detail::format_double(r.mu) << ','
        << detail::format_double(r.log10_gap) << ',' << (r.success ? 1 : 0) << ',' << r.iters
        << ',' << (r.converged ? 1 : 0) << ',' << detail::format_double(r.wall_ms) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<CellRecord> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kResultsCsvHeader)
    throw std::runtime_error("unexpected results CSV header in " + path);
  std::vector<CellRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    CellRecord r;
    auto next_tok = [&]() {
      if (!std::getline(ss, tok, ',')) throw std::runtime_error("short CSV row: " + line);
      return tok;
    };
    r.rho = std::stod(next_tok());
    r.alpha = std::stod(next_tok());
    r.p = std::stoi(next_tok());
    r.seed = std::stoull(next_tok());
    r.mu = std::stod(next_tok());
    r.log10_gap = std::stod(next_tok());
    r.success = std::stoi(next_tok()) != 0;
    r.iters = std::stoi(next_tok());
    r.converged = std::stoi(next_tok()) != 0;
    r.wall_ms = std::stod(next_tok());
    records.push_back(r);
  }
  return records;
}

inline json to_json(const SweepConfig& cfg) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["n"] = cfg.n;
  j["rho_grid"] = cfg.rho_grid;
  j["alpha_grid"] = cfg.alpha_grid;
  j["p_list"] = cfg.p_list;
  j["instances_per_cell"] = cfg.instances_per_cell;
  j["master_seed"] = cfg.master_seed;
  j["workers"] = cfg.workers;
  j["channel"] = to_json(cfg.channel);
  j["signal_prior"] = to_json(cfg.prior, cfg.channel.field());
  j["solver"] = to_json(cfg.solver);
  j["output_dir"] = cfg.output_dir;
  return j;
}

inline SweepConfig sweep_from_json(const json& j) {
  check_schema_version(j, "sweep config");
  detail::reject_unknown_keys(j,
                              {"schema_version", "n", "rho_grid", "alpha_grid", "p_list",
                               "instances_per_cell", "master_seed", "workers", "channel",
                               "signal_prior", "solver", "output_dir"},
                              "sweep config");
  SweepConfig cfg;
  cfg.n = j.at("n").get<int>();
  cfg.rho_grid = j.at("rho_grid").get<std::vector<double>>();
  cfg.alpha_grid = j.at("alpha_grid").get<std::vector<double>>();
  cfg.p_list = j.at("p_list").get<std::vector<int>>();
  cfg.instances_per_cell = j.value("instances_per_cell", cfg.instances_per_cell);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  cfg.workers = j.value("workers", cfg.workers);
  cfg.channel = channel_from_json(j.at("channel"));
  FieldType prior_field = FieldType::kReal;
  cfg.prior = signal_prior_from_json(j.at("signal_prior"), &prior_field);
  if (prior_field != cfg.channel.field())
    throw std::invalid_argument("signal prior field does not match channel field");
  if (j.contains("solver")) cfg.solver = solver_from_json(j["solver"]);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.validate();
  return cfg;
}

// Per-cell success fractions plus the closed-form reference curves.
inline json summarize_sweep(const SweepConfig& cfg, const std::vector<CellRecord>& records) {
  struct Key {
    double rho, alpha;
    int p;
    bool operator<(const Key& o) const {
      return std::tie(rho, alpha, p) < std::tie(o.rho, o.alpha, o.p);
    }
  };
  std::map<Key, std::pair<int, int>> cells;  // (successes, total)
  std::map<Key, double> iters;
  for (const CellRecord& r : records) {
    auto& c = cells[{r.rho, r.alpha, r.p}];
    c.second += 1;
    if (r.success) c.first += 1;
    iters[{r.rho, r.alpha, r.p}] += r.iters;
  }
  json cell_array = json::array();
  for (const auto& [key, counts] : cells) {
    cell_array.push_back(json{{"rho", key.rho},
                              {"alpha", key.alpha},
                              {"P", key.p},
                              {"success_fraction", double(counts.first) / counts.second},
                              {"instances", counts.second},
                              {"mean_iters", iters[key] / counts.second}});
  }
  json bounds = json::object();
  for (int p : cfg.p_list) {
    if (p < 2) continue;
    std::vector<double> rhos;
    for (double r : cfg.rho_grid) rhos.push_back(r);
    const BoundCurve curve = alpha_min_curve(rhos, p);
    json samples = json::array();
    for (const auto& [rho, a] : curve.samples) samples.push_back(json::array({rho, a}));
    bounds["alpha_min_P" + std::to_string(p)] = samples;
  }
  return json{{"schema_version", kConfigSchemaVersion},
              {"config", to_json(cfg)},
              {"cells", cell_array},
              {"bounds", bounds}};
}

}  // namespace calamp
