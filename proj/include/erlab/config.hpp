#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "erlab/langevin.hpp"
#include "erlab/memory.hpp"
#include "erlab/scaling.hpp"
#include "erlab/thermostat.hpp"

namespace erlab {

struct SweepSettings {
  std::vector<double> betas{0.01, 0.05, 0.1, 0.5, 1.0};
  std::vector<SurrogateKind> surrogates{SurrogateKind::Softmax, SurrogateKind::Variance, SurrogateKind::LogDet};
  std::vector<ThermostatMode> modes{ThermostatMode::Fixed, ThermostatMode::Thermostat, ThermostatMode::RlThermostat};

  void validate() const;
  bool operator==(const SweepSettings&) const = default;
};

struct PotentialSettings {
  std::string kind = "quadratic";  ///< quadratic | double_well
  double stiffness = 1.0;
  double barrier = 1.0;

  Potential make(int dim = 1) const;
  void validate() const;
  bool operator==(const PotentialSettings&) const = default;
};

struct LangevinSettings {
  PotentialSettings potential;
  int dim = 1;
  double beta = 0.5;
  double dt = 1e-3;
  int steps = 10000;
  int particles = 100000;
  double init_mean = 0.0;
  double init_std = 0.0;
  std::uint64_t seed = 0;
  int record_every = 100;
  double lo = -8.0;
  double hi = 8.0;
  int cells = 400;

  void validate() const;
  bool operator==(const LangevinSettings&) const = default;
};

struct FokkerPlanckSettings {
  PotentialSettings potential;
  double beta = 1.0;
  double lo = -8.0;
  double hi = 8.0;
  int cells = 400;
  /// 0 picks 0.9 of the stability limit.
  double dt = 0.0;
  int steps = 10000;
  int record_every = 100;
  std::string initial = "gaussian";  ///< gaussian | uniform | bimodal | gibbs
  double init_mean = 2.0;
  double init_std = 0.5;
  double init_left = -2.0;
  double init_right = 2.0;

  DensityGrid initial_density(const Potential& pot) const;
  void validate() const;
  bool operator==(const FokkerPlanckSettings&) const = default;
};

/// A trajectory CSV paired with its scale S.
struct ScaledTrajectory {
  double S = 0.0;
  std::string path;
  bool operator==(const ScaledTrajectory&) const = default;
};

struct ScalingSettings {
  ScalingModel model{1.0, 1.0, 1.0, 0.5, 0.5, 0.0};
  std::vector<double> scales{4.0, 16.0, 64.0, 256.0};
  double noise_rel = 0.0;
  std::uint64_t seed = 0;
  std::vector<ScaledTrajectory> trajectories;

  void validate() const;
  bool operator==(const ScalingSettings&) const = default;
};

/// Everything any subcommand reads. Sections a command does not use are still
/// validated, so a bad config fails before any computation.
struct ExperimentConfig {
  RunConfig run;
  SweepSettings sweep;
  LangevinSettings langevin;
  FokkerPlanckSettings fokker_planck;
  ScalingSettings scaling;
  MemorySweepConfig memory;
  std::string output_dir = "out";
  bool plots = true;

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Strict parse: unknown keys, wrong types and invariant violations throw
/// ValidationError naming the dotted key path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
/// Every field, defaults included, as pretty-printed JSON.
std::string to_json(const ExperimentConfig& cfg);

}  // namespace erlab
