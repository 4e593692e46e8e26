#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "erlab/dynamics.hpp"

namespace erlab {

enum class ThermostatMode { Fixed, Thermostat, RlThermostat };

std::string to_string(ThermostatMode mode);
ThermostatMode parse_thermostat_mode(std::string_view text);

/// Projected feedback update
///   beta <- clamp(beta + alpha_r (r - r*) - alpha_g (G - G*), beta_min, beta_max).
///
/// fixed mode ignores both gains, thermostat mode ignores alpha_r (force
/// feedback only), rl_thermostat uses both. Unset targets are calibrated by
/// the training loop: r* is the running mean of the first 10 rewards and G*
/// the initial information force.
struct ThermostatConfig {
  ThermostatMode mode = ThermostatMode::Fixed;
  double beta0 = 0.1;
  double beta_min = 0.0;
  double beta_max = 10.0;
  double alpha_r = 0.01;
  double alpha_g = 0.01;
  std::optional<double> r_star;
  std::optional<double> G_star;

  double effective_alpha_r() const { return mode == ThermostatMode::RlThermostat ? alpha_r : 0.0; }
  double effective_alpha_g() const { return mode == ThermostatMode::Fixed ? 0.0 : alpha_g; }
  void validate() const;
  bool operator==(const ThermostatConfig&) const = default;
};

/// A term whose target is unset contributes nothing.
double update_beta(double beta, double reward, double force, const ThermostatConfig& cfg);

/// Everything a single training run needs. The run starts from beta = thermo.beta0;
/// energy.beta is not consulted.
struct RunConfig {
  EncoderSpec encoder;
  TaskSpec task;
  EnergyConfig energy;
  ThermostatConfig thermo;
  EffectivenessConfig effectiveness;
  double eta = 0.05;
  int steps = 200;
  std::uint64_t seed = 0;
  int log_every = 1;
  /// 0 = full batch; otherwise a fresh random subset of this size every step.
  int batch_size = 0;
  /// Draw a random validation subset of val_batch_size every step instead of
  /// reusing the whole validation set.
  bool resample_val = false;
  int val_batch_size = 32;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// -L_pred on the validation batch.
double reward_signal(const ParamVector& theta, const Dataset& val_batch, const EncoderSpec& spec, TaskKind kind);

struct RunResult {
  Trajectory trajectory;
  ParamVector theta;
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
  double final_gen_gap = 0.0;
};

ParamVector initial_params(const RunConfig& cfg);

/// The entropy-regulated training loop: per step, forward, noisy
/// representation, surrogate, information force, gradient step on F with the
/// current beta, reward on the validation batch, beta update. Throws
/// DivergenceError (with the partial trajectory) on a non-finite loss.
RunResult run_er_hclm(const RunConfig& cfg);
RunResult run_er_hclm(const RunConfig& cfg, const TaskData& data);

struct SweepCell {
  double beta = 0.0;
  SurrogateKind surrogate = SurrogateKind::LogDet;
  ThermostatMode mode = ThermostatMode::Fixed;
  RunConfig config;
  std::optional<RunResult> result;
  std::string error;
};

struct SummaryRow {
  double beta = 0.0;
  SurrogateKind surrogate = SurrogateKind::LogDet;
  ThermostatMode mode = ThermostatMode::Fixed;
  double final_test_loss = 0.0;
  double gen_gap = 0.0;
  double mean_G = 0.0;
  double mean_beta_t = 0.0;
  double mean_reward = 0.0;
  bool effective = false;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<SummaryRow> summary;
};

/// Per-cell config: base with beta0 = beta, the given surrogate and mode, and
/// seed = hash(base.seed, beta index, surrogate index, mode index).
RunConfig sweep_cell_config(const RunConfig& base, double beta, SurrogateKind surrogate, ThermostatMode mode,
                            std::size_t bi, std::size_t si, std::size_t mi);

/// Runs the beta x surrogate x mode grid on `jobs` worker threads. Cells are
/// ordered beta-major, then surrogate, then mode. A failing cell keeps its
/// error message and a NaN summary row; the rest of the grid still runs.
SweepResult sweep(const RunConfig& base, const std::vector<double>& betas, const std::vector<SurrogateKind>& surrogates,
                  const std::vector<ThermostatMode>& modes, int jobs = 1);

SummaryRow summarize(const SweepCell& cell);

/// Header beta,surrogate,mode,final_test_loss,gen_gap,mean_G,mean_beta_t,mean_reward,effective.
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(std::istream& is);

}  // namespace erlab
