#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "erlab/config.hpp"

using namespace erlab;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("empty object gives valid defaults") {
  const ExperimentConfig cfg = parse_config("{}");
  CHECK(cfg == ExperimentConfig{});
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.run.energy.surrogate.epsilon == 1e-4);
  CHECK(cfg.run.energy.surrogate.sigma_xi == 0.1);
  CHECK(cfg.run.effectiveness.c == 0.05);
  CHECK(cfg.run.effectiveness.tau == 0.5);
  CHECK(cfg.run.thermo.alpha_r == 0.01);
  CHECK(cfg.run.thermo.beta_max == 10.0);
  CHECK_FALSE(cfg.run.thermo.r_star.has_value());
}

TEST_CASE("beta_min above beta_max names both keys") {
  const std::string msg = error_of(R"({"run": {"thermostat": {"beta_min": 2, "beta_max": 1, "beta0": 1.5}}})");
  CHECK(msg.find("beta_min") != std::string::npos);
  CHECK(msg.find("beta_max") != std::string::npos);
  CHECK(msg.find("run.thermostat") != std::string::npos);
}

TEST_CASE("unknown keys and wrong types are errors with dotted paths") {
  CHECK(error_of(R"({"run": {"energy": {"surrogate": {"kind": "logdet", "eps": 1}}}})")
            .find("run.energy.surrogate.eps") != std::string::npos);
  CHECK(error_of(R"({"bogus": 1})").find("bogus") != std::string::npos);
  CHECK(error_of(R"({"run": {"steps": "many"}})").find("run.steps") != std::string::npos);
  CHECK(error_of(R"({"run": {"energy": {"surrogate": {"kind": "entropy"}}}})").find("entropy") != std::string::npos);
  CHECK_FALSE(error_of(R"({"run": {"eta": -1}})").empty());
  CHECK_FALSE(error_of("{not json").empty());
  CHECK_FALSE(error_of(R"({"memory": {"load_ratios": []}})").empty());
}

TEST_CASE("round trip through JSON") {
  ExperimentConfig cfg;
  cfg.run.encoder.kind = EncoderKind::Attn1;
  cfg.run.encoder.hidden_dims = {7, 3};
  cfg.run.task.kind = TaskKind::ClassifyGaussians;
  cfg.run.encoder.output_dim = cfg.run.task.num_classes;
  cfg.run.energy.surrogate = {SurrogateKind::Softmax, 0.003, 0.25};
  cfg.run.energy.dec_kind = DecKind::QuadraticPenalty;
  cfg.run.thermo.mode = ThermostatMode::RlThermostat;
  cfg.run.thermo.r_star = -0.75;
  cfg.run.effectiveness.c_mode = ThresholdMode::Absolute;
  cfg.run.eta = 1.0 / 3.0;
  cfg.run.seed = 0xFFFFFFFFFFFFull;
  cfg.sweep.betas = {0.0, 0.1};
  cfg.sweep.modes = {ThermostatMode::Fixed};
  cfg.langevin.potential.kind = "double_well";
  cfg.fokker_planck.initial = "bimodal";
  cfg.scaling.model.gamma_exp = 0.3;
  cfg.scaling.trajectories = {{16.0, "a.csv"}, {64.0, "b.csv"}};
  cfg.memory.dynamics.mode = DynamicsMode::TanhOde;
  cfg.memory.dynamics.gain = 2.5;
  cfg.output_dir = "elsewhere";
  cfg.plots = false;
  const std::string text = to_json(cfg);
  CHECK(parse_config(text) == cfg);
  CHECK(to_json(parse_config(text)) == text);
  CHECK(text.find("\"gamma\"") != std::string::npos);
}

TEST_CASE("load_config reads files") {
  const std::string path = "test_config_tmp.json";
  {
    std::ofstream os(path);
    os << R"({"run": {"steps": 7}})";
  }
  CHECK(load_config(path).run.steps == 7);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_config("definitely_missing.json"), ValidationError);
}

TEST_CASE("settings helpers") {
  FokkerPlanckSettings fp;
  const Potential pot = fp.potential.make();
  for (const char* kind : {"gaussian", "uniform", "bimodal", "gibbs"}) {
    fp.initial = kind;
    CHECK(fp.initial_density(pot).mass() == doctest::Approx(1.0));
  }
  PotentialSettings p;
  p.kind = "double_well";
  CHECK(p.make(2).dim == 2);
  p.kind = "cubic";
  CHECK_THROWS_AS(p.validate(), ValidationError);
}
