// Command-line front end: single solves, phase-diagram sweeps, instance
// generation and the numerical self-check suites.
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "calamp/bounds.hpp"
#include "calamp/instance_io.hpp"
#include "calamp/metrics.hpp"
#include "calamp/selfcheck.hpp"
#include "calamp/solver.hpp"
#include "calamp/sweep.hpp"
#include "calamp/synthgen.hpp"

namespace {

using namespace calamp;

struct SolveOptions {
  int n = 1000;
  double alpha = 0.5;
  int p = 1;
  double rho = 0.2;
  double sigma2 = 1.0;
  std::string channel = "gain";
  double epsilon = 0.2;
  double m_f = 0.0;
  std::optional<double> sigma_f;
  double delta = 1e-15;
  double wd = 1.0;
  double inflation = 1.1;
  double complex_gain_variance = 10.0;
  double d_cal = 1.0;
  std::uint64_t seed = 1;
  std::optional<double> beta;
  int t_max = 300;
  double tol = 1e-12;
  std::string out_json;
  std::string dump_instance;
  std::string config_path;
};

InstanceParams instance_params_from(const SolveOptions& opt) {
  InstanceParams params;
  params.n = opt.n;
  params.m = std::max(1, static_cast<int>(std::lround(opt.alpha * opt.n)));
  params.p = opt.p;
  params.prior.rho = opt.rho;
  params.prior.sigma2 = opt.sigma2;
  params.seed = opt.seed;
  params.channel.type = channel_type_from_string(opt.channel);
  params.channel.epsilon = opt.epsilon;
  params.channel.noise_mean = opt.m_f;
  params.channel.noise_var = opt.sigma_f;
  params.channel.delta = opt.delta;
  params.channel.gain_width = opt.wd;
  params.channel.gain_inflation = opt.inflation;
  params.channel.complex_gain_variance = opt.complex_gain_variance;
  params.channel.calibrated_gain = opt.d_cal;
  params.prior.validate();
  params.channel.validate();
  return params;
}

SolverConfig solver_config_from(const SolveOptions& opt) {
  SolverConfig cfg;
  cfg.beta = opt.beta.value_or(
      instance_params_from(opt).channel.type == ChannelType::kRealGain ||
              instance_params_from(opt).channel.type == ChannelType::kComplexGain
          ? 0.8
          : 1.0);
  cfg.t_max = opt.t_max;
  cfg.tol = opt.tol;
  return cfg;
}

template <class T>
json run_single(const InstanceParams& params, const SolverConfig& cfg,
                const std::string& dump_path) {
  const auto inst = generate_instance<T>(params);
  if (!dump_path.empty()) save_instance(dump_path, inst);
  const BernoulliGaussPrior prior(params.prior.rho, params.prior.sigma2);

  const auto t0 = std::chrono::steady_clock::now();
  SolveResult<T> res;
  switch (params.channel.type) {
    case ChannelType::kFaulty:
      if constexpr (!FieldTraits<T>::is_complex) {
        const double nv =
            params.channel.noise_var.value_or(params.prior.rho * params.prior.sigma2);
        res = solve<T>(inst.mixing, inst.observations, prior,
                       FaultyChannel(params.channel.epsilon, params.channel.noise_mean, nv), cfg);
      }
      break;
    case ChannelType::kRealGain:
      if constexpr (!FieldTraits<T>::is_complex) {
        res = solve<T>(
            inst.mixing, inst.observations, prior,
            RealGainChannel(params.channel.delta,
                            UniformGainPrior(params.channel.gain_width,
                                             params.channel.gain_inflation)),
            cfg);
      }
      break;
    case ChannelType::kComplexGain:
      if constexpr (FieldTraits<T>::is_complex) {
        res = solve<T>(inst.mixing, inst.observations, prior,
                       ComplexGainChannel(params.channel.delta,
                                          ComplexNormalGainPrior(
                                              params.channel.complex_gain_variance)),
                       cfg);
      }
      break;
    case ChannelType::kCalibrated:
      res = solve<T>(inst.mixing, inst.observations, prior,
                     CalibratedChannel<T>(params.channel.delta,
                                          std::vector<T>(params.m,
                                                         T(params.channel.calibrated_gain))),
                     cfg);
      break;
  }
  const auto t1 = std::chrono::steady_clock::now();
  if (res.x_hat.size() == 0) throw std::runtime_error("channel/field dispatch failure");

  const RecoveryScore score = cross_correlation(inst.signal, res.x_hat);
  json out;
  out["schema_version"] = kConfigSchemaVersion;
  out["n"] = params.n;
  out["m"] = params.m;
  out["alpha"] = params.alpha();
  out["P"] = params.p;
  out["rho"] = params.prior.rho;
  out["seed"] = params.seed;
  out["channel"] = to_json(params.channel);
  out["solver"] = to_json(cfg);
  out["mu"] = score.mu;
  out["log10_gap"] = score.log10_gap;
  out["success"] = score.success();
  out["mse"] = score.mse;
  out["per_column_mu"] = score.per_column_mu;
  out["iterations"] = res.iterations;
  out["converged"] = res.converged;
  out["diverged"] = res.diverged;
  if (res.diverged) out["divergence_note"] = res.divergence_note;
  out["zero_evidence_total"] = res.zero_evidence_total;
  out["wall_ms"] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  if (res.has_gain_estimates) {
    out["gain_mse_up_to_scale"] = gain_mse_up_to_scale<T>(inst.gains, res.d_hat);
  }
  if (!res.history.empty()) {
    json hist = json::array();
    for (const auto& h : res.history) hist.push_back(h.mean_delta2);
    out["mean_delta2_history"] = hist;
  }
  return out;
}

int cmd_solve(const SolveOptions& opt) {
  InstanceParams params;
  SolverConfig cfg;
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) {
      std::cerr << "error: cannot open config " << opt.config_path << "\n";
      return 2;
    }
    json j = json::parse(in, nullptr, true, true);
    check_schema_version(j, "solve config");
    detail::reject_unknown_keys(
        j, {"schema_version", "n", "alpha", "m", "p", "seed", "channel", "signal_prior",
            "solver"},
        "solve config");
    params.n = j.at("n").get<int>();
    params.m = j.contains("m") ? j["m"].get<int>()
                               : std::max(1, static_cast<int>(std::lround(
                                                 j.at("alpha").get<double>() * params.n)));
    params.p = j.at("p").get<int>();
    params.seed = j.value("seed", 1);
    params.channel = channel_from_json(j.at("channel"));
    FieldType field = FieldType::kReal;
    params.prior = signal_prior_from_json(j.at("signal_prior"), &field);
    cfg = j.contains("solver") ? solver_from_json(j["solver"]) : SolverConfig{};
  } else {
    params = instance_params_from(opt);
    cfg = solver_config_from(opt);
  }

  const json out = params.channel.field() == FieldType::kComplex
                       ? run_single<std::complex<double>>(params, cfg, opt.dump_instance)
                       : run_single<double>(params, cfg, opt.dump_instance);
  const std::string text = out.dump(2);
  if (!opt.out_json.empty()) {
    std::ofstream f(opt.out_json);
    if (!f) {
      std::cerr << "error: cannot write " << opt.out_json << "\n";
      return 2;
    }
    f << text << "\n";
  }
  std::cout << text << "\n";
  return 0;
}

int cmd_phase_diagram(const std::string& config_path, const std::string& alpha_cs_cache,
                      bool quiet) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot open config " << config_path << "\n";
    return 2;
  }
  SweepConfig cfg;
  try {
    cfg = sweep_from_json(json::parse(in, nullptr, true, true));
  } catch (const std::exception& e) {
    std::cerr << "error: bad sweep config: " << e.what() << "\n";
    return 2;
  }
  std::filesystem::create_directories(cfg.output_dir);
  const auto records = run_sweep(cfg, quiet ? std::function<void(std::size_t, std::size_t)>{}
                                            : [](std::size_t done, std::size_t total) {
                                                if (done % 16 == 0 || done == total)
                                                  std::cerr << "\r" << done << "/" << total
                                                            << std::flush;
                                              });
  if (!quiet) std::cerr << "\n";
  const std::string csv_path = cfg.output_dir + "/results.csv";
  write_results_csv(csv_path, records);
  json summary = summarize_sweep(cfg, records);
  if (!alpha_cs_cache.empty()) {
    const BoundCurve cs = read_alpha_cs_cache(alpha_cs_cache);
    json samples = json::array();
    for (const auto& [rho, a] : cs.samples) samples.push_back(json::array({rho, a}));
    summary["bounds"]["alpha_cs_empirical"] = samples;
    if (cfg.channel.type == ChannelType::kFaulty) {
      const BoundCurve cal = alpha_cal_faulty_curve(cs, cfg.channel.epsilon);
      json cal_samples = json::array();
      for (const auto& [rho, a] : cal.samples) cal_samples.push_back(json::array({rho, a}));
      summary["bounds"]["alpha_cal"] = cal_samples;
    } else {
      summary["bounds"]["alpha_cal"] = samples;
    }
  }
  std::ofstream sf(cfg.output_dir + "/summary.json");
  sf << summary.dump(2) << "\n";
  std::cout << "wrote " << csv_path << " (" << records.size() << " records)\n";
  return 0;
}

int cmd_selfcheck(int scale) {
  const auto results = run_selfcheck(scale);
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("[%s] %-28s cases=%-5d max_residual=%.3e tol=%.0e\n",
                r.pass ? "PASS" : "FAIL", r.name.c_str(), r.cases, r.max_residual, r.tolerance);
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

int cmd_gen(const SolveOptions& opt, const std::string& out_path) {
  const InstanceParams params = instance_params_from(opt);
  if (params.channel.field() == FieldType::kComplex) {
    save_instance(out_path, generate_instance<std::complex<double>>(params));
  } else {
    save_instance(out_path, generate_instance<double>(params));
  }
  std::cout << "wrote " << out_path << " (n=" << params.n << " m=" << params.m
            << " p=" << params.p << ")\n";
  return 0;
}

int cmd_alpha_cs(double rho_lo, double rho_hi, double rho_step, int n, int seeds,
                 double resolution, const std::string& out_path) {
  BoundCurve curve;
  curve.kind = "alpha_cs(empirical)";
  for (double rho = rho_lo; rho <= rho_hi + 1e-12; rho += rho_step) {
    const double a = estimate_alpha_cs(rho, n, seeds, resolution);
    curve.samples.emplace_back(rho, a);
    std::cerr << "rho=" << rho << " alpha_cs~" << a << "\n";
  }
  write_curve_csv(out_path, curve, kAlphaCsCacheHeader);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cal-AMP: blind sensor calibration via approximate message passing"};
  app.require_subcommand(1);

  SolveOptions opt;
  auto add_instance_flags = [&](CLI::App* cmd) {
    cmd->add_option("--n", opt.n, "signal dimension");
    cmd->add_option("--alpha", opt.alpha, "measurement rate M/N");
    cmd->add_option("--p", opt.p, "number of signal samples");
    cmd->add_option("--rho", opt.rho, "sparsity fraction");
    cmd->add_option("--sigma2", opt.sigma2, "nonzero-component variance");
    cmd->add_option("--channel", opt.channel,
                    "channel variant: gain | complex-gain | faulty | calibrated");
    cmd->add_option("--epsilon", opt.epsilon, "faulty-sensor fraction");
    cmd->add_option("--mf", opt.m_f, "faulty-noise mean");
    cmd->add_option("--sigmaf", opt.sigma_f,
                    "faulty-noise variance (default: rho * sigma2)");
    cmd->add_option("--delta", opt.delta, "additive noise variance");
    cmd->add_option("--wd", opt.wd, "uniform gain prior width");
    cmd->add_option("--inflation", opt.inflation, "solver-side gain prior width multiplier");
    cmd->add_option("--complex-gain-variance", opt.complex_gain_variance,
                    "complex gain prior variance");
    cmd->add_option("--dcal", opt.d_cal, "calibrated channel gain");
    cmd->add_option("--seed", opt.seed, "instance seed");
  };

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve one synthetic instance");
  add_instance_flags(solve_cmd);
  solve_cmd->add_option("--beta", opt.beta, "damping (default 0.8 gain channels, else 1)");
  solve_cmd->add_option("--tmax", opt.t_max, "max iterations");
  solve_cmd->add_option("--tol", opt.tol, "convergence tolerance on mean |dx|^2");
  solve_cmd->add_option("--out", opt.out_json, "write result JSON here");
  solve_cmd->add_option("--dump-instance", opt.dump_instance, "dump the instance (binary)");
  solve_cmd->add_option("--config", opt.config_path, "solve config JSON (overrides flags)");

  std::string sweep_config, alpha_cs_cache;
  bool quiet = false;
  CLI::App* pd_cmd = app.add_subcommand("phase-diagram", "run a (rho, alpha) sweep");
  pd_cmd->add_option("--config", sweep_config, "sweep config JSON")->required();
  pd_cmd->add_option("--alpha-cs", alpha_cs_cache,
                     "empirical alpha_cs cache CSV to embed as reference curves");
  pd_cmd->add_flag("--quiet", quiet, "suppress progress output");

  int selfcheck_scale = 1;
  CLI::App* sc_cmd = app.add_subcommand("selfcheck", "run the numerical oracle suites");
  sc_cmd->add_option("--scale", selfcheck_scale, "case-count multiplier");

  std::string gen_out = "instance.bin";
  CLI::App* gen_cmd = app.add_subcommand("gen", "generate and dump one instance");
  add_instance_flags(gen_cmd);
  gen_cmd->add_option("--out", gen_out, "output path");

  double acs_rho_lo = 0.1, acs_rho_hi = 0.9, acs_rho_step = 0.1, acs_res = 0.02;
  int acs_n = 500, acs_seeds = 3;
  std::string acs_out = "alpha_cs.csv";
  CLI::App* acs_cmd = app.add_subcommand(
      "alpha-cs", "estimate the calibrated-channel transition curve by bisection");
  acs_cmd->add_option("--rho-lo", acs_rho_lo);
  acs_cmd->add_option("--rho-hi", acs_rho_hi);
  acs_cmd->add_option("--rho-step", acs_rho_step);
  acs_cmd->add_option("--n", acs_n);
  acs_cmd->add_option("--seeds", acs_seeds);
  acs_cmd->add_option("--resolution", acs_res);
  acs_cmd->add_option("--out", acs_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return cmd_solve(opt);
    if (pd_cmd->parsed()) return cmd_phase_diagram(sweep_config, alpha_cs_cache, quiet);
    if (sc_cmd->parsed()) return cmd_selfcheck(selfcheck_scale);
    if (gen_cmd->parsed()) return cmd_gen(opt, gen_out);
    if (acs_cmd->parsed())
      return cmd_alpha_cs(acs_rho_lo, acs_rho_hi, acs_rho_step, acs_n, acs_seeds, acs_res,
                          acs_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
