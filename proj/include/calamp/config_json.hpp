#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "calamp/descriptors.hpp"
#include "calamp/solver.hpp"

namespace calamp {

using nlohmann::json;

inline constexpr int kConfigSchemaVersion = 1;

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                                const std::string& context) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw std::invalid_argument("unknown field \"" + it.key() + "\" in " + context);
  }
}

}  // namespace detail

inline json to_json(const SignalPriorDescriptor& p, FieldType field) {
  return json{{"variant", field == FieldType::kComplex ? "complex-bernoulli-gauss"
                                                       : "real-bernoulli-gauss"},
              {"rho", p.rho},
              {"sigma2", p.sigma2}};
}

inline SignalPriorDescriptor signal_prior_from_json(const json& j, FieldType* field_out) {
  detail::reject_unknown_keys(j, {"variant", "rho", "sigma2"}, "signal_prior");
  SignalPriorDescriptor p;
  const std::string variant = j.value("variant", "real-bernoulli-gauss");
  if (variant == "real-bernoulli-gauss") {
    if (field_out) *field_out = FieldType::kReal;
  } else if (variant == "complex-bernoulli-gauss") {
    if (field_out) *field_out = FieldType::kComplex;
  } else {
    throw std::invalid_argument("unknown signal prior variant: " + variant);
  }
  p.rho = j.value("rho", p.rho);
  p.sigma2 = j.value("sigma2", p.sigma2);
  p.validate();
  return p;
}

inline json to_json(const ChannelDescriptor& c) {
  json j{{"variant", to_string(c.type)}};
  switch (c.type) {
    case ChannelType::kFaulty:
      j["epsilon"] = c.epsilon;
      j["m_f"] = c.noise_mean;
      if (c.noise_var)
        j["sigma_f"] = *c.noise_var;  // a variance; omitted means rho * sigma2
      break;
    case ChannelType::kRealGain:
      j["delta"] = c.delta;
      j["gain_prior"] = json{{"variant", "uniform-real"},
                             {"w_d", c.gain_width},
                             {"inflation", c.gain_inflation}};
      break;
    case ChannelType::kComplexGain:
      j["delta"] = c.delta;
      j["gain_prior"] =
          json{{"variant", "complex-normal"}, {"complex_gain_variance", c.complex_gain_variance}};
      break;
    case ChannelType::kCalibrated:
      j["delta"] = c.delta;
      j["gain_prior"] = json{{"variant", "point-mass"}, {"d_cal", c.calibrated_gain}};
      break;
  }
  return j;
}

inline ChannelDescriptor channel_from_json(const json& j) {
  detail::reject_unknown_keys(j, {"variant", "epsilon", "m_f", "sigma_f", "delta", "gain_prior"},
                              "channel");
  ChannelDescriptor c;
  c.type = channel_type_from_string(j.at("variant").get<std::string>());
  switch (c.type) {
    case ChannelType::kFaulty:
      c.epsilon = j.value("epsilon", c.epsilon);
      c.noise_mean = j.value("m_f", c.noise_mean);
      if (j.contains("sigma_f") && !j["sigma_f"].is_null())
        c.noise_var = j["sigma_f"].get<double>();
      break;
    case ChannelType::kRealGain: {
      c.delta = j.value("delta", c.delta);
      if (j.contains("gain_prior")) {
        const json& g = j["gain_prior"];
        detail::reject_unknown_keys(g, {"variant", "w_d", "inflation"}, "gain_prior");
        if (g.value("variant", "uniform-real") != std::string("uniform-real"))
          throw std::invalid_argument("gain channel requires uniform-real gain prior");
        c.gain_width = g.value("w_d", c.gain_width);
        c.gain_inflation = g.value("inflation", c.gain_inflation);
      }
      break;
    }
    case ChannelType::kComplexGain: {
      c.delta = j.value("delta", c.delta);
      if (j.contains("gain_prior")) {
        const json& g = j["gain_prior"];
        detail::reject_unknown_keys(g, {"variant", "complex_gain_variance"}, "gain_prior");
        if (g.value("variant", "complex-normal") != std::string("complex-normal"))
          throw std::invalid_argument("complex-gain channel requires complex-normal gain prior");
        c.complex_gain_variance = g.value("complex_gain_variance", c.complex_gain_variance);
      }
      break;
    }
    case ChannelType::kCalibrated: {
      c.delta = j.value("delta", c.delta);
      if (j.contains("gain_prior")) {
        const json& g = j["gain_prior"];
        detail::reject_unknown_keys(g, {"variant", "d_cal"}, "gain_prior");
        if (g.value("variant", "point-mass") != std::string("point-mass"))
          throw std::invalid_argument("calibrated channel requires point-mass gain prior");
        c.calibrated_gain = g.value("d_cal", c.calibrated_gain);
      }
      break;
    }
  }
  c.validate();
  return c;
}

inline json to_json(const SolverConfig& s) {
  return json{{"beta", s.beta},
              {"t_max", s.t_max},
              {"tol", s.tol},
              {"variance_floor", s.variance_floor}};
}

inline SolverConfig solver_from_json(const json& j) {
  detail::reject_unknown_keys(j, {"beta", "t_max", "tol", "variance_floor"}, "solver");
  SolverConfig s;
  s.beta = j.value("beta", s.beta);
  s.t_max = j.value("t_max", s.t_max);
  s.tol = j.value("tol", s.tol);
  s.variance_floor = j.value("variance_floor", s.variance_floor);
  if (!(s.beta > 0.0) || s.beta > 1.0)
    throw std::invalid_argument("solver: beta must be in (0, 1]");
  if (s.t_max < 1) throw std::invalid_argument("solver: t_max must be >= 1");
  if (!(s.tol > 0.0)) throw std::invalid_argument("solver: tol must be positive");
  return s;
}

inline void check_schema_version(const json& j, const std::string& context) {
  if (!j.contains("schema_version"))
    throw std::invalid_argument(context + ": missing schema_version");
  if (j["schema_version"].get<int>() != kConfigSchemaVersion)
    throw std::invalid_argument(context + ": unsupported schema_version");
}

}  // namespace calamp
