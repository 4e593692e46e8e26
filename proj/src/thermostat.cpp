#include "erlab/thermostat.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

#include "erlab/csv.hpp"
#include "erlab/rng.hpp"

namespace erlab {

namespace {

constexpr std::uint64_t kNoiseStream = 0x4E01;
constexpr std::uint64_t kBatchStream = 0xBA7C;
constexpr std::uint64_t kValStream = 0x7A1D;
constexpr int kRewardWarmup = 10;

Dataset subset(const Dataset& data, int size, std::uint64_t seed) {
  const auto n = static_cast<int>(data.size());
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  CounterRng rng(seed);
  for (int i = 0; i < size; ++i) {
    const int j = i + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n - i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  Dataset out;
  out.x.resize(size, data.x.cols());
  out.y.resize(size, data.y.cols());
  for (int i = 0; i < size; ++i) {
    out.x.row(i) = data.x.row(idx[static_cast<std::size_t>(i)]);
    out.y.row(i) = data.y.row(idx[static_cast<std::size_t>(i)]);
  }
  return out;
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

std::string to_string(ThermostatMode mode) {
  switch (mode) {
    case ThermostatMode::Fixed: return "fixed";
    case ThermostatMode::Thermostat: return "thermostat";
    case ThermostatMode::RlThermostat: return "rl_thermostat";
  }
  return "fixed";
}

ThermostatMode parse_thermostat_mode(std::string_view text) {
  if (text == "fixed") return ThermostatMode::Fixed;
  if (text == "thermostat") return ThermostatMode::Thermostat;
  if (text == "rl_thermostat") return ThermostatMode::RlThermostat;
  throw ValidationError("unknown thermostat mode '" + std::string(text) + "' (expected fixed|thermostat|rl_thermostat)");
}

void ThermostatConfig::validate() const {
  if (!(beta_min >= 0.0)) throw ValidationError("thermostat.beta_min must be >= 0");
  if (!(beta_min <= beta_max))
    throw ValidationError("thermostat.beta_min must not exceed thermostat.beta_max");
  if (!(beta0 >= beta_min && beta0 <= beta_max))
    throw ValidationError("thermostat.beta0 must lie in [thermostat.beta_min, thermostat.beta_max]");
  if (!(alpha_r >= 0.0)) throw ValidationError("thermostat.alpha_r must be >= 0");
  if (!(alpha_g >= 0.0)) throw ValidationError("thermostat.alpha_g must be >= 0");
}

double update_beta(double beta, double reward, double force, const ThermostatConfig& cfg) {
  if (cfg.mode == ThermostatMode::Fixed) return beta;
  double raw = beta;
  if (cfg.r_star) raw += cfg.effective_alpha_r() * (reward - *cfg.r_star);
  if (cfg.G_star) raw -= cfg.effective_alpha_g() * (force - *cfg.G_star);
  return std::clamp(raw, cfg.beta_min, cfg.beta_max);
}

void RunConfig::validate() const {
  encoder.validate();
  task.validate();
  energy.validate();
  thermo.validate();
  effectiveness.validate();
  if (encoder.input_dim != task.input_dim) throw ValidationError("encoder.input_dim must equal task.input_dim");
  if (encoder.output_dim != task.target_dim())
    throw ValidationError("encoder.output_dim must equal the task's target width (" +
                          std::to_string(task.target_dim()) + ")");
  if (!(eta > 0.0)) throw ValidationError("eta must be > 0");
  if (steps < 1) throw ValidationError("steps must be >= 1");
  if (log_every < 1) throw ValidationError("log_every must be >= 1");
  if (batch_size != 0 && (batch_size < 2 || batch_size > task.n_train))
    throw ValidationError("batch_size must be 0 (full batch) or in [2, task.n_train]");
  if (resample_val && (val_batch_size < 1 || val_batch_size > task.n_val))
    throw ValidationError("val_batch_size must be in [1, task.n_val]");
}

double reward_signal(const ParamVector& theta, const Dataset& val_batch, const EncoderSpec& spec, TaskKind kind) {
  if (val_batch.size() == 0) throw ValidationError("reward needs a nonempty validation batch");
  return -pred_loss(theta, val_batch, spec, kind);
}

ParamVector initial_params(const RunConfig& cfg) { return init_params(cfg.encoder, cfg.seed); }

RunResult run_er_hclm(const RunConfig& cfg) {
  cfg.validate();
  return run_er_hclm(cfg, make_task(cfg.task));
}

RunResult run_er_hclm(const RunConfig& cfg, const TaskData& data) {
  cfg.validate();
  const TaskKind kind = cfg.task.kind;
  ThermostatConfig thermo = cfg.thermo;
  const bool calibrate_r = !thermo.r_star.has_value();
  const bool calibrate_g = !thermo.G_star.has_value();
  double reward_sum = 0.0;

  RunResult out;
  ParamVector theta = initial_params(cfg);
  double beta = thermo.beta0;
  const ModelObjective full_batch(cfg.encoder, data.train, kind);

  for (int t = 0; t < cfg.steps; ++t) {
    const auto step = static_cast<std::uint64_t>(t);
    Dataset mini;
    const Objective* objective = &full_batch;
    std::optional<ModelObjective> mini_objective;
    if (cfg.batch_size > 0 && cfg.batch_size < cfg.task.n_train) {
      mini = subset(data.train, cfg.batch_size, hash_seed({cfg.seed, kBatchStream, step}));
      mini_objective.emplace(cfg.encoder, mini, kind);
      objective = &*mini_objective;
    }

    const Evaluation ev = evaluate(*objective, theta, cfg.energy, hash_seed({cfg.seed, kNoiseStream, step}));
    if (!std::isfinite(ev.pred_loss) || !std::isfinite(ev.entropy))
      throw DivergenceError("non-finite loss at step " + std::to_string(t), t, out.trajectory);
    const double force = ev.info_force();
    const Vector grad = ev.grad_energy(beta);

    const bool logged = t % cfg.log_every == 0;
    StepRecord rec;
    if (logged) {
      rec.t = t;
      rec.L_pred = ev.pred_loss;
      rec.H = ev.entropy;
      rec.F = ev.energy(beta);
      rec.G = force;
      rec.I_inj = ev.injection();
      rec.D_diss = ev.dissipation(beta);
      rec.beta_t = beta;
      rec.grad_norm_L = ev.grad_pred.norm();
      rec.grad_norm_F = grad.norm();
      rec.gen_gap = gen_gap(theta, data.train, data.test, cfg.encoder, kind);
    }

    theta -= cfg.eta * grad;
    if (!theta.allFinite()) {
      if (logged) out.trajectory.push_back(rec);
      throw DivergenceError("non-finite parameters after step " + std::to_string(t), t, out.trajectory);
    }

    const double reward =
        cfg.resample_val
            ? reward_signal(theta, subset(data.val, cfg.val_batch_size, hash_seed({cfg.seed, kValStream, step})),
                            cfg.encoder, kind)
            : reward_signal(theta, data.val, cfg.encoder, kind);
    if (logged) {
      rec.r_t = reward;
      out.trajectory.push_back(rec);
    }

    if (calibrate_g && t == 0) thermo.G_star = force;
    if (calibrate_r && t < kRewardWarmup) {
      reward_sum += reward;
      thermo.r_star = reward_sum / static_cast<double>(t + 1);
    }
    beta = update_beta(beta, reward, force, thermo);
  }

  out.final_train_loss = pred_loss(theta, data.train, cfg.encoder, kind);
  out.final_test_loss = pred_loss(theta, data.test, cfg.encoder, kind);
  out.final_gen_gap = out.final_test_loss - out.final_train_loss;
  out.theta = std::move(theta);
  return out;
}

RunConfig sweep_cell_config(const RunConfig& base, double beta, SurrogateKind surrogate, ThermostatMode mode,
                            std::size_t bi, std::size_t si, std::size_t mi) {
  RunConfig cfg = base;
  cfg.thermo.beta0 = beta;
  cfg.energy.beta = beta;
  cfg.energy.surrogate.kind = surrogate;
  cfg.thermo.mode = mode;
  cfg.seed = hash_seed({base.seed, bi, si, mi});
  return cfg;
}

SummaryRow summarize(const SweepCell& cell) {
  SummaryRow row;
  row.beta = cell.beta;
  row.surrogate = cell.surrogate;
  row.mode = cell.mode;
  if (!cell.result) {
    row.final_test_loss = row.gen_gap = row.mean_G = row.mean_beta_t = row.mean_reward = nan();
    return row;
  }
  const auto& r = *cell.result;
  const auto& traj = r.trajectory;
  const double n = static_cast<double>(traj.size());
  row.final_test_loss = r.final_test_loss;
  row.gen_gap = r.final_gen_gap;
  row.mean_G = std::accumulate(traj.begin(), traj.end(), 0.0, [](double s, const StepRecord& x) { return s + x.G; }) / n;
  row.mean_beta_t =
      std::accumulate(traj.begin(), traj.end(), 0.0, [](double s, const StepRecord& x) { return s + x.beta_t; }) / n;
  row.mean_reward =
      std::accumulate(traj.begin(), traj.end(), 0.0, [](double s, const StepRecord& x) { return s + x.r_t; }) / n;
  row.effective = effectiveness(traj, cell.config.effectiveness).effective;
  return row;
}

SweepResult sweep(const RunConfig& base, const std::vector<double>& betas, const std::vector<SurrogateKind>& surrogates,
                  const std::vector<ThermostatMode>& modes, int jobs) {
  if (betas.empty() || surrogates.empty() || modes.empty())
    throw ValidationError("sweep needs nonempty beta, surrogate, and mode lists");
  SweepResult out;
  for (std::size_t bi = 0; bi < betas.size(); ++bi)
    for (std::size_t si = 0; si < surrogates.size(); ++si)
      for (std::size_t mi = 0; mi < modes.size(); ++mi) {
        SweepCell cell;
        cell.beta = betas[bi];
        cell.surrogate = surrogates[si];
        cell.mode = modes[mi];
        cell.config = sweep_cell_config(base, betas[bi], surrogates[si], modes[mi], bi, si, mi);
        out.cells.push_back(std::move(cell));
      }

  base.task.validate();
  const TaskData data = make_task(base.task);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < out.cells.size(); i = next++) {
      auto& cell = out.cells[i];
      try {
        cell.result = run_er_hclm(cell.config, data);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(out.cells.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (const auto& cell : out.cells) out.summary.push_back(summarize(cell));
  return out;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "beta,surrogate,mode,final_test_loss,gen_gap,mean_G,mean_beta_t,mean_reward,effective\n";
  for (const auto& r : rows) {
    os << format_double(r.beta) << ',' << to_string(r.surrogate) << ',' << to_string(r.mode) << ','
       << format_double(r.final_test_loss) << ',' << format_double(r.gen_gap) << ',' << format_double(r.mean_G) << ','
       << format_double(r.mean_beta_t) << ',' << format_double(r.mean_reward) << ',' << (r.effective ? "true" : "false")
       << '\n';
  }
}

std::vector<SummaryRow> read_summary_csv(std::istream& is) {
  const CsvTable table = read_csv(is);
  std::vector<SummaryRow> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    SummaryRow r;
    r.beta = table.number(i, "beta");
    r.surrogate = parse_surrogate_kind(table.rows[i][table.column("surrogate")]);
    r.mode = parse_thermostat_mode(table.rows[i][table.column("mode")]);
    r.final_test_loss = table.number(i, "final_test_loss");
    r.gen_gap = table.number(i, "gen_gap");
    r.mean_G = table.number(i, "mean_G");
    r.mean_beta_t = table.number(i, "mean_beta_t");
    r.mean_reward = table.number(i, "mean_reward");
    const auto& eff = table.rows[i][table.column("effective")];
    if (eff != "true" && eff != "false") throw ValidationError("summary 'effective' must be true or false");
    r.effective = eff == "true";
    rows.push_back(r);
  }
  return rows;
}

}  // namespace erlab
