#include <doctest.h>

#include <cmath>
#include <sstream>

#include "erlab/thermostat.hpp"
#include "generators.hpp"

using namespace erlab;

namespace {

RunConfig tiny_run() {
  RunConfig cfg;
  cfg.task.n_train = 32;
  cfg.task.n_test = 32;
  cfg.task.n_val = 16;
  cfg.task.input_dim = 4;
  cfg.encoder.input_dim = 4;
  cfg.encoder.hidden_dims = {6};
  cfg.encoder.rep_dim = 3;
  cfg.encoder.output_dim = 1;
  cfg.energy.gamma = 0.0;
  cfg.steps = 25;
  cfg.eta = 0.05;
  cfg.seed = 5;
  return cfg;
}

ThermostatConfig thermo(ThermostatMode mode, double beta0, double lo, double hi, double ar, double ag) {
  ThermostatConfig c;
  c.mode = mode;
  c.beta0 = beta0;
  c.beta_min = lo;
  c.beta_max = hi;
  c.alpha_r = ar;
  c.alpha_g = ag;
  c.r_star = 0.0;
  c.G_star = 0.0;
  return c;
}

}  // namespace

TEST_CASE("thermostat mode strings") {
  for (auto m : {ThermostatMode::Fixed, ThermostatMode::Thermostat, ThermostatMode::RlThermostat})
    CHECK(parse_thermostat_mode(to_string(m)) == m);
  CHECK(to_string(ThermostatMode::RlThermostat) == "rl_thermostat");
  CHECK_THROWS_AS(parse_thermostat_mode("rl"), ValidationError);
}

TEST_CASE("update_beta examples") {
  ThermostatConfig c = thermo(ThermostatMode::RlThermostat, 1.0, 0.0, 2.0, 0.1, 0.0);
  c.r_star = 0.5;
  c.G_star = 3.0;
  CHECK(update_beta(1.0, 0.5, 3.0, c) == 1.0);
  CHECK(update_beta(1.0, 1.5, 3.0, c) == doctest::Approx(1.1));
  c.alpha_r = 1.0;
  CHECK(update_beta(1.0, 2.0, 3.0, c) == 2.0);  // raw 2.5 clamps to beta_max

  ThermostatConfig fixed = c;
  fixed.mode = ThermostatMode::Fixed;
  CHECK(update_beta(1.3, 100.0, -50.0, fixed) == 1.3);

  ThermostatConfig force_only = thermo(ThermostatMode::Thermostat, 1.0, 0.0, 2.0, 5.0, 0.1);
  CHECK(update_beta(1.0, 100.0, 2.0, force_only) == doctest::Approx(0.8));

  ThermostatConfig unset = c;
  unset.r_star.reset();
  unset.G_star.reset();
  CHECK(update_beta(1.0, 7.0, 9.0, unset) == 1.0);
}

TEST_CASE("update_beta stays in bounds") {
  CounterRng rng(31);
  for (int c = 0; c < 500; ++c) {
    const double lo = testgen::uniform_real(rng, 0.0, 2.0);
    const double hi = lo + testgen::uniform_real(rng, 0.0, 3.0);
    const auto mode = static_cast<ThermostatMode>(testgen::uniform_int(rng, 0, 2));
    ThermostatConfig cfg = thermo(mode, lo, lo, hi, testgen::uniform_real(rng, 0.0, 2.0),
                                  testgen::uniform_real(rng, 0.0, 2.0));
    const double beta = testgen::uniform_real(rng, lo, hi);
    const double next = update_beta(beta, testgen::uniform_real(rng, -5, 5), testgen::uniform_real(rng, 0, 10), cfg);
    CHECK(next >= lo);
    CHECK(next <= hi);
  }
}

TEST_CASE("thermostat config validation names the keys") {
  ThermostatConfig c;
  c.beta_min = 2.0;
  c.beta_max = 1.0;
  c.beta0 = 1.5;
  try {
    c.validate();
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("beta_min") != std::string::npos);
    CHECK(msg.find("beta_max") != std::string::npos);
  }
  c = ThermostatConfig{};
  c.beta0 = 20.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("reward_signal") {
  EncoderSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {};
  spec.rep_dim = 2;
  spec.output_dim = 1;
  ParamVector theta = ParamVector::Zero(spec.param_count());
  const Dataset zeros{Matrix::Ones(5, 2), Matrix::Zero(5, 1)};
  CHECK(reward_signal(theta, zeros, spec, TaskKind::RegressionLowRank) == 0.0);

  const Dataset ones{Matrix::Ones(5, 2), Matrix::Ones(5, 1)};
  ParamVector better = theta;
  better(better.size() - 1) = 0.5;  // head bias
  CHECK(reward_signal(better, ones, spec, TaskKind::RegressionLowRank) >
        reward_signal(theta, ones, spec, TaskKind::RegressionLowRank));

  spec.output_dim = 4;
  Matrix onehot = Matrix::Zero(8, 4);
  for (int i = 0; i < 8; ++i) onehot(i, i % 4) = 1.0;
  const Dataset cls{Matrix::Ones(8, 2), onehot};
  CHECK(reward_signal(ParamVector::Zero(spec.param_count()), cls, spec, TaskKind::ClassifyGaussians) ==
        doctest::Approx(-1.3863).epsilon(1e-4));
  CHECK_THROWS_AS(reward_signal(theta, Dataset{Matrix(0, 2), Matrix(0, 1)}, spec, TaskKind::RegressionLowRank),
                  ValidationError);
}

TEST_CASE("fixed beta = 0 run is plain gradient descent") {
  RunConfig cfg = tiny_run();
  cfg.thermo = thermo(ThermostatMode::Fixed, 0.0, 0.0, 10.0, 0.01, 0.01);
  const TaskData data = make_task(cfg.task);
  const RunResult res = run_er_hclm(cfg, data);
  const ModelObjective obj(cfg.encoder, data.train, cfg.task.kind);
  CHECK(res.theta == plain_gd(obj, initial_params(cfg), cfg.eta, cfg.steps));
  for (const auto& r : res.trajectory) CHECK(r.beta_t == 0.0);
}

TEST_CASE("run contract") {
  RunConfig cfg = tiny_run();
  cfg.steps = 1;
  CHECK(run_er_hclm(cfg).trajectory.size() == 1);

  cfg = tiny_run();
  cfg.log_every = 5;
  const RunResult a = run_er_hclm(cfg);
  CHECK(a.trajectory.size() == 5);
  CHECK(a.trajectory[1].t == 5);
  const RunResult b = run_er_hclm(cfg);
  CHECK(a.theta == b.theta);
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    CHECK(a.trajectory[i].F == b.trajectory[i].F);
    CHECK(a.trajectory[i].r_t == b.trajectory[i].r_t);
  }
  for (const auto& r : a.trajectory) {
    CHECK(r.D_diss == doctest::Approx(r.beta_t * r.G * r.G).epsilon(1e-10));
    REQUIRE(r.gen_gap.has_value());
  }
  CHECK(a.final_gen_gap == doctest::Approx(a.final_test_loss - a.final_train_loss));
}

TEST_CASE("beta stays in bounds for every mode") {
  for (auto mode : {ThermostatMode::Fixed, ThermostatMode::Thermostat, ThermostatMode::RlThermostat}) {
    RunConfig cfg = tiny_run();
    cfg.thermo.mode = mode;
    cfg.thermo.beta0 = 0.3;
    cfg.thermo.beta_min = 0.2;
    cfg.thermo.beta_max = 0.4;
    cfg.thermo.alpha_g = 5.0;
    cfg.thermo.alpha_r = 5.0;
    const RunResult r = run_er_hclm(cfg);
    for (const auto& rec : r.trajectory) {
      CHECK(rec.beta_t >= 0.2);
      CHECK(rec.beta_t <= 0.4);
      if (mode == ThermostatMode::Fixed) CHECK(rec.beta_t == 0.3);
    }
  }
}

TEST_CASE("force-only thermostat drives beta down while G exceeds its target") {
  RunConfig cfg = tiny_run();
  cfg.thermo = thermo(ThermostatMode::Thermostat, 1.0, 0.1, 2.0, 0.0, 0.05);
  cfg.thermo.G_star = 0.0;
  const RunResult r = run_er_hclm(cfg);
  for (std::size_t i = 0; i + 1 < r.trajectory.size(); ++i) {
    const auto& a = r.trajectory[i];
    const auto& b = r.trajectory[i + 1];
    REQUIRE(a.G > 0.0);
    if (a.beta_t > cfg.thermo.beta_min) CHECK(b.beta_t < a.beta_t);
    else CHECK(b.beta_t == cfg.thermo.beta_min);
  }
}

TEST_CASE("mini-batch and validation resampling stay deterministic") {
  RunConfig cfg = tiny_run();
  cfg.batch_size = 8;
  cfg.resample_val = true;
  cfg.val_batch_size = 4;
  const RunResult a = run_er_hclm(cfg);
  CHECK(a.theta == run_er_hclm(cfg).theta);
  CHECK(a.theta != run_er_hclm(tiny_run()).theta);
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("divergence carries the partial trajectory") {
  RunConfig cfg = tiny_run();
  cfg.eta = 1e6;
  cfg.steps = 200;
  try {
    run_er_hclm(cfg);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.step() >= 0);
    CHECK(e.partial().size() <= static_cast<std::size_t>(e.step()) + 1);
  }
}

TEST_CASE("sweep") {
  const RunConfig base = tiny_run();
  SUBCASE("a 1x1x1 grid is a single run") {
    const SweepResult s = sweep(base, {0.2}, {SurrogateKind::Variance}, {ThermostatMode::Thermostat});
    REQUIRE(s.cells.size() == 1);
    const RunConfig cell_cfg =
        sweep_cell_config(base, 0.2, SurrogateKind::Variance, ThermostatMode::Thermostat, 0, 0, 0);
    CHECK(s.cells[0].result->theta == run_er_hclm(cell_cfg).theta);
  }
  SUBCASE("grid cardinality, ordering and determinism") {
    RunConfig small = base;
    small.steps = 3;
    const std::vector<double> betas{0.0, 0.1, 0.5};
    const std::vector<SurrogateKind> surr{SurrogateKind::Softmax, SurrogateKind::Variance, SurrogateKind::LogDet};
    const std::vector<ThermostatMode> modes{ThermostatMode::Fixed, ThermostatMode::Thermostat,
                                            ThermostatMode::RlThermostat};
    const SweepResult a = sweep(small, betas, surr, modes, 3);
    const SweepResult b = sweep(small, betas, surr, modes, 1);
    REQUIRE(a.summary.size() == 27);
    CHECK(a.summary[0].beta == 0.0);
    CHECK(a.summary[26].beta == 0.5);
    CHECK(a.summary[1].mode == ThermostatMode::Thermostat);
    CHECK(a.summary[3].surrogate == SurrogateKind::Variance);
    std::ostringstream sa, sb;
    write_summary_csv(sa, a.summary);
    write_summary_csv(sb, b.summary);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().rfind("beta,surrogate,mode,final_test_loss,gen_gap,mean_G,mean_beta_t,mean_reward,effective\n",
                         0) == 0);
    std::istringstream in(sa.str());
    const auto back = read_summary_csv(in);
    REQUIRE(back.size() == 27);
    CHECK(back[13].mean_G == a.summary[13].mean_G);
    CHECK(back[13].effective == a.summary[13].effective);
  }
  SUBCASE("a failing cell is recorded and the grid continues") {
    RunConfig wild = base;
    wild.eta = 1e6;
    wild.steps = 200;
    const SweepResult s = sweep(wild, {0.1, 0.2}, {SurrogateKind::LogDet}, {ThermostatMode::Fixed});
    REQUIRE(s.cells.size() == 2);
    for (const auto& c : s.cells) CHECK_FALSE(c.error.empty());
    CHECK(std::isnan(s.summary[0].mean_G));
  }
  CHECK_THROWS_AS(sweep(base, {}, {SurrogateKind::LogDet}, {ThermostatMode::Fixed}), ValidationError);
}
