#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace calamp {

enum class FieldType { kReal, kComplex };

enum class ChannelType { kFaulty, kRealGain, kComplexGain, kCalibrated };

inline std::string to_string(ChannelType t) {
  switch (t) {
    case ChannelType::kFaulty: return "faulty";
    case ChannelType::kRealGain: return "gain";
    case ChannelType::kComplexGain: return "complex-gain";
    case ChannelType::kCalibrated: return "calibrated";
  }
  return "?";
}

inline ChannelType channel_type_from_string(const std::string& s) {
  if (s == "faulty") return ChannelType::kFaulty;
  if (s == "gain") return ChannelType::kRealGain;
  if (s == "complex-gain") return ChannelType::kComplexGain;
  if (s == "calibrated") return ChannelType::kCalibrated;
  throw std::invalid_argument("unknown channel variant: " + s);
}

// Declarative channel description used by generation, the harness and the
// JSON config layer; concrete channel objects are built from it.
struct ChannelDescriptor {
  ChannelType type = ChannelType::kCalibrated;

  // faulty sensors
  double epsilon = 0.2;
  double noise_mean = 0.0;
  std::optional<double> noise_var;  // defaults to the signal prior variance

  // gain calibration (real and complex) and calibrated sensors
  double delta = 1e-15;
  double gain_width = 1.0;       // uniform gain prior width (real gain)
  double gain_inflation = 1.1;   // solver-side prior width multiplier
  double complex_gain_variance = 10.0;
  double calibrated_gain = 1.0;

  FieldType field() const {
    return type == ChannelType::kComplexGain ? FieldType::kComplex : FieldType::kReal;
  }

  void validate() const {
    switch (type) {
      case ChannelType::kFaulty:
        if (epsilon < 0.0 || epsilon > 1.0)
          throw std::invalid_argument("faulty channel: epsilon must be in [0, 1]");
        if (noise_var && !(*noise_var > 0.0))
          throw std::invalid_argument("faulty channel: sigma_f must be positive");
        break;
      case ChannelType::kRealGain:
        if (!(gain_width > 0.0) || !(gain_width < 2.0))
          throw std::invalid_argument("gain channel: wd must be in (0, 2)");
        if (!(gain_inflation >= 1.0))
          throw std::invalid_argument("gain channel: inflation must be >= 1");
        if (delta < 0.0) throw std::invalid_argument("gain channel: delta must be nonnegative");
        break;
      case ChannelType::kComplexGain:
        if (!(complex_gain_variance > 0.0))
          throw std::invalid_argument("complex-gain channel: gain variance must be positive");
        if (delta < 0.0)
          throw std::invalid_argument("complex-gain channel: delta must be nonnegative");
        break;
      case ChannelType::kCalibrated:
        if (delta < 0.0)
          throw std::invalid_argument("calibrated channel: delta must be nonnegative");
        if (calibrated_gain == 0.0)
          throw std::invalid_argument("calibrated channel: gain must be nonzero");
        break;
    }
  }
};

struct SignalPriorDescriptor {
  double rho = 0.2;
  double sigma2 = 1.0;

  void validate() const {
    if (!(rho > 0.0) || rho > 1.0) throw std::invalid_argument("prior: rho must be in (0, 1]");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("prior: sigma2 must be positive");
  }
};

}  // namespace calamp
