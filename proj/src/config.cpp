#include "erlab/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "erlab/errors.hpp"

namespace erlab {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError("config key '" + path + "' " + what);
}

void read(const json& j, const std::string& path, double& out) {
  if (!j.is_number()) fail(path, "must be a number");
  out = j.get<double>();
}

void read(const json& j, const std::string& path, int& out) {
  if (!j.is_number_integer()) fail(path, "must be an integer");
  const auto v = j.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail(path, "is out of range");
  out = static_cast<int>(v);
}

void read(const json& j, const std::string& path, std::uint64_t& out) {
  if (j.is_number_unsigned()) {
    out = j.get<std::uint64_t>();
    return;
  }
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) fail(path, "must be a non-negative integer");
  out = static_cast<std::uint64_t>(j.get<std::int64_t>());
}

void read(const json& j, const std::string& path, bool& out) {
  if (!j.is_boolean()) fail(path, "must be true or false");
  out = j.get<bool>();
}

void read(const json& j, const std::string& path, std::string& out) {
  if (!j.is_string()) fail(path, "must be a string");
  out = j.get<std::string>();
}

void read(const json& j, const std::string& path, std::optional<double>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  double v = 0.0;
  read(j, path, v);
  out = v;
}

template <class E, class Parse>
void read_enum(const json& j, const std::string& path, E& out, Parse parse) {
  std::string text;
  read(j, path, text);
  try {
    out = parse(text);
  } catch (const ValidationError& e) {
    fail(path, e.what());
  }
}

void read(const json& j, const std::string& p, SurrogateKind& out) { read_enum(j, p, out, parse_surrogate_kind); }
void read(const json& j, const std::string& p, ThermostatMode& out) { read_enum(j, p, out, parse_thermostat_mode); }
void read(const json& j, const std::string& p, EncoderKind& out) { read_enum(j, p, out, parse_encoder_kind); }
void read(const json& j, const std::string& p, Activation& out) { read_enum(j, p, out, parse_activation); }
void read(const json& j, const std::string& p, TaskKind& out) { read_enum(j, p, out, parse_task_kind); }
void read(const json& j, const std::string& p, OmegaKind& out) { read_enum(j, p, out, parse_omega_kind); }
void read(const json& j, const std::string& p, DecKind& out) { read_enum(j, p, out, parse_dec_kind); }
void read(const json& j, const std::string& p, ThresholdMode& out) { read_enum(j, p, out, parse_threshold_mode); }
void read(const json& j, const std::string& p, DynamicsMode& out) { read_enum(j, p, out, parse_dynamics_mode); }

void read(const json& j, const std::string& path, ScaledTrajectory& out);

template <class T>
void read(const json& j, const std::string& path, std::vector<T>& out) {
  if (!j.is_array()) fail(path, "must be an array");
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    T v{};
    read(j[i], path + "[" + std::to_string(i) + "]", v);
    out.push_back(std::move(v));
  }
}

// Object reader that remembers which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "must be an object");
  }

  template <class T>
  Section& field(const char* key, T& out) {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) read(*it, join(key), out);
    return *this;
  }

  Section sub(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    auto it = j_.find(key);
    return Section(it == j_.end() ? empty : *it, join(key));
  }

  const std::string& path() const { return path_; }

  void done() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ValidationError("unknown config key '" + join(item.key()) + "'");
  }

 private:
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read(const json& j, const std::string& path, ScaledTrajectory& out) {
  Section s(j, path);
  s.field("S", out.S).field("path", out.path).done();
}

template <class Fn>
void checked(const std::string& path, Fn&& validate) {
  try {
    validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void read_run(Section s, RunConfig& run) {
  {
    Section e = s.sub("encoder");
    auto& enc = run.encoder;
    e.field("kind", enc.kind).field("input_dim", enc.input_dim).field("hidden_dims", enc.hidden_dims);
    e.field("rep_dim", enc.rep_dim).field("output_dim", enc.output_dim).field("activation", enc.activation);
    e.field("seq_len", enc.seq_len).done();
  }
  {
    Section t = s.sub("task");
    auto& task = run.task;
    t.field("kind", task.kind).field("n_train", task.n_train).field("n_test", task.n_test).field("n_val", task.n_val);
    t.field("input_dim", task.input_dim).field("noise_std", task.noise_std).field("seed", task.seed);
    t.field("rank", task.rank).field("output_dim", task.output_dim).field("num_classes", task.num_classes);
    t.field("separation", task.separation).done();
  }
  {
    Section e = s.sub("energy");
    auto& en = run.energy;
    e.field("beta", en.beta).field("gamma", en.gamma).field("lambda", en.lambda);
    e.field("omega_kind", en.omega_kind).field("dec_kind", en.dec_kind);
    Section sg = e.sub("surrogate");
    sg.field("kind", en.surrogate.kind).field("epsilon", en.surrogate.epsilon).field("sigma_xi", en.surrogate.sigma_xi);
    sg.done();
    e.done();
  }
  {
    Section t = s.sub("thermostat");
    auto& th = run.thermo;
    t.field("mode", th.mode).field("beta0", th.beta0).field("beta_min", th.beta_min).field("beta_max", th.beta_max);
    t.field("alpha_r", th.alpha_r).field("alpha_g", th.alpha_g).field("r_star", th.r_star).field("G_star", th.G_star);
    t.done();
    checked(t.path(), [&] { th.validate(); });
  }
  {
    Section e = s.sub("effectiveness");
    e.field("c", run.effectiveness.c).field("tau", run.effectiveness.tau).field("c_mode", run.effectiveness.c_mode);
    e.done();
  }
  s.field("eta", run.eta).field("steps", run.steps).field("seed", run.seed).field("log_every", run.log_every);
  s.field("batch_size", run.batch_size).field("resample_val", run.resample_val);
  s.field("val_batch_size", run.val_batch_size).done();
}

void read_potential(Section s, PotentialSettings& p) {
  s.field("kind", p.kind).field("stiffness", p.stiffness).field("barrier", p.barrier).done();
}

json potential_json(const PotentialSettings& p) {
  return {{"kind", p.kind}, {"stiffness", p.stiffness}, {"barrier", p.barrier}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <class T>
json string_list(const std::vector<T>& items) {
  json out = json::array();
  for (const auto& item : items) out.push_back(to_string(item));
  return out;
}

}  // namespace

void SweepSettings::validate() const {
  if (betas.empty() || surrogates.empty() || modes.empty())
    throw ValidationError("betas, surrogates and modes must all be non-empty");
  for (double b : betas)
    if (!(b >= 0.0)) throw ValidationError("betas must be >= 0");
}

Potential PotentialSettings::make(int dim) const {
  if (kind == "quadratic") return quadratic_potential(dim, stiffness);
  if (kind == "double_well") return double_well_potential(dim, barrier);
  throw ValidationError("unknown potential kind '" + kind + "' (quadratic, double_well)");
}

void PotentialSettings::validate() const {
  if (kind != "quadratic" && kind != "double_well")
    throw ValidationError("unknown potential kind '" + kind + "' (quadratic, double_well)");
  if (!(stiffness > 0.0)) throw ValidationError("stiffness must be > 0");
  if (!(barrier > 0.0)) throw ValidationError("barrier must be > 0");
}

void LangevinSettings::validate() const {
  potential.validate();
  if (dim < 1) throw ValidationError("dim must be >= 1");
  if (!(beta >= 0.0)) throw ValidationError("beta must be >= 0");
  if (!(dt > 0.0)) throw ValidationError("dt must be > 0");
  if (steps < 0) throw ValidationError("steps must be >= 0");
  if (particles < 1) throw ValidationError("particles must be >= 1");
  if (!(init_std >= 0.0)) throw ValidationError("init_std must be >= 0");
  if (record_every < 1) throw ValidationError("record_every must be >= 1");
  if (!(hi > lo) || cells < 2) throw ValidationError("histogram needs hi > lo and cells >= 2");
}

DensityGrid FokkerPlanckSettings::initial_density(const Potential& pot) const {
  if (initial == "gaussian") return gaussian_density(lo, hi, cells, init_mean, init_std);
  if (initial == "uniform") return uniform_density(lo, hi, cells);
  if (initial == "bimodal") return bimodal_density(lo, hi, cells, init_left, init_right, init_std);
  if (initial == "gibbs") return gibbs_density(lo, hi, cells, pot, beta);
  throw ValidationError("unknown initial density '" + initial + "' (gaussian, uniform, bimodal, gibbs)");
}

void FokkerPlanckSettings::validate() const {
  potential.validate();
  if (!(beta >= 0.0)) throw ValidationError("beta must be >= 0");
  if (!(hi > lo) || cells < 2) throw ValidationError("grid needs hi > lo and cells >= 2");
  if (!(dt >= 0.0)) throw ValidationError("dt must be >= 0 (0 = automatic)");
  if (steps < 0) throw ValidationError("steps must be >= 0");
  if (record_every < 1) throw ValidationError("record_every must be >= 1");
  if (initial != "gaussian" && initial != "uniform" && initial != "bimodal" && initial != "gibbs")
    throw ValidationError("unknown initial density '" + initial + "' (gaussian, uniform, bimodal, gibbs)");
  if ((initial == "gaussian" || initial == "bimodal") && !(init_std > 0.0))
    throw ValidationError("init_std must be > 0");
  if (initial == "gibbs" && !(beta > 0.0)) throw ValidationError("a gibbs initial density needs beta > 0");
}

void ScalingSettings::validate() const {
  model.validate();
  if (scales.size() < 3) throw ValidationError("scales needs at least 3 values");
  for (double S : scales)
    if (!(S > 0.0)) throw ValidationError("scales must be > 0");
  if (!(noise_rel >= 0.0)) throw ValidationError("noise_rel must be >= 0");
  for (const auto& t : trajectories) {
    if (!(t.S > 0.0)) throw ValidationError("trajectory S must be > 0");
    if (t.path.empty()) throw ValidationError("trajectory path must be non-empty");
  }
}

void ExperimentConfig::validate() const {
  checked("run", [&] { run.validate(); });
  checked("sweep", [&] { sweep.validate(); });
  checked("langevin", [&] { langevin.validate(); });
  checked("fokker_planck", [&] { fokker_planck.validate(); });
  checked("scaling", [&] { scaling.validate(); });
  checked("memory", [&] { memory.validate(); });
  if (output_dir.empty()) throw ValidationError("config key 'output_dir' must be non-empty");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Section s(root, "");
  read_run(s.sub("run"), cfg.run);
  {
    Section w = s.sub("sweep");
    w.field("betas", cfg.sweep.betas).field("surrogates", cfg.sweep.surrogates).field("modes", cfg.sweep.modes);
    w.done();
  }
  {
    Section l = s.sub("langevin");
    auto& L = cfg.langevin;
    read_potential(l.sub("potential"), L.potential);
    l.field("dim", L.dim).field("beta", L.beta).field("dt", L.dt).field("steps", L.steps);
    l.field("particles", L.particles).field("init_mean", L.init_mean).field("init_std", L.init_std);
    l.field("seed", L.seed).field("record_every", L.record_every).field("lo", L.lo).field("hi", L.hi);
    l.field("cells", L.cells).done();
  }
  {
    Section f = s.sub("fokker_planck");
    auto& F = cfg.fokker_planck;
    read_potential(f.sub("potential"), F.potential);
    f.field("beta", F.beta).field("lo", F.lo).field("hi", F.hi).field("cells", F.cells).field("dt", F.dt);
    f.field("steps", F.steps).field("record_every", F.record_every).field("initial", F.initial);
    f.field("init_mean", F.init_mean).field("init_std", F.init_std).field("init_left", F.init_left);
    f.field("init_right", F.init_right).done();
  }
  {
    Section c = s.sub("scaling");
    auto& S = cfg.scaling;
    Section m = c.sub("model");
    m.field("a", S.model.a).field("b", S.model.b).field("alpha", S.model.alpha).field("gamma", S.model.gamma_exp);
    m.field("q", S.model.q).field("L_inf", S.model.L_inf).done();
    c.field("scales", S.scales).field("noise_rel", S.noise_rel).field("seed", S.seed);
    c.field("trajectories", S.trajectories).done();
  }
  {
    Section m = s.sub("memory");
    auto& M = cfg.memory;
    m.field("N", M.N).field("load_ratios", M.load_ratios).field("seeds", M.seeds).field("base_seed", M.base_seed);
    m.field("flip_fraction", M.flip_fraction).field("T", M.T).field("retrieval_threshold", M.retrieval_threshold);
    m.field("tau_r", M.tau_r);
    Section d = m.sub("dynamics");
    d.field("mode", M.dynamics.mode).field("gain", M.dynamics.gain).field("dt", M.dynamics.dt).done();
    m.done();
  }
  s.field("output_dir", cfg.output_dir).field("plots", cfg.plots).done();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_json(const ExperimentConfig& cfg) {
  const RunConfig& r = cfg.run;
  json run = {
      {"encoder",
       {{"kind", to_string(r.encoder.kind)},
        {"input_dim", r.encoder.input_dim},
        {"hidden_dims", r.encoder.hidden_dims},
        {"rep_dim", r.encoder.rep_dim},
        {"output_dim", r.encoder.output_dim},
        {"activation", to_string(r.encoder.activation)},
        {"seq_len", r.encoder.seq_len}}},
      {"task",
       {{"kind", to_string(r.task.kind)},
        {"n_train", r.task.n_train},
        {"n_test", r.task.n_test},
        {"n_val", r.task.n_val},
        {"input_dim", r.task.input_dim},
        {"noise_std", r.task.noise_std},
        {"seed", r.task.seed},
        {"rank", r.task.rank},
        {"output_dim", r.task.output_dim},
        {"num_classes", r.task.num_classes},
        {"separation", r.task.separation}}},
      {"energy",
       {{"beta", r.energy.beta},
        {"gamma", r.energy.gamma},
        {"lambda", r.energy.lambda},
        {"omega_kind", to_string(r.energy.omega_kind)},
        {"dec_kind", to_string(r.energy.dec_kind)},
        {"surrogate",
         {{"kind", to_string(r.energy.surrogate.kind)},
          {"epsilon", r.energy.surrogate.epsilon},
          {"sigma_xi", r.energy.surrogate.sigma_xi}}}}},
      {"thermostat",
       {{"mode", to_string(r.thermo.mode)},
        {"beta0", r.thermo.beta0},
        {"beta_min", r.thermo.beta_min},
        {"beta_max", r.thermo.beta_max},
        {"alpha_r", r.thermo.alpha_r},
        {"alpha_g", r.thermo.alpha_g},
        {"r_star", optional_json(r.thermo.r_star)},
        {"G_star", optional_json(r.thermo.G_star)}}},
      {"effectiveness",
       {{"c", r.effectiveness.c}, {"tau", r.effectiveness.tau}, {"c_mode", to_string(r.effectiveness.c_mode)}}},
      {"eta", r.eta},
      {"steps", r.steps},
      {"seed", r.seed},
      {"log_every", r.log_every},
      {"batch_size", r.batch_size},
      {"resample_val", r.resample_val},
      {"val_batch_size", r.val_batch_size}};

  const auto& L = cfg.langevin;
  const auto& F = cfg.fokker_planck;
  const auto& S = cfg.scaling;
  const auto& M = cfg.memory;
  json trajectories = json::array();
  for (const auto& t : S.trajectories) trajectories.push_back({{"S", t.S}, {"path", t.path}});

  json root = {
      {"run", run},
      {"sweep",
       {{"betas", cfg.sweep.betas},
        {"surrogates", string_list(cfg.sweep.surrogates)},
        {"modes", string_list(cfg.sweep.modes)}}},
      {"langevin",
       {{"potential", potential_json(L.potential)},
        {"dim", L.dim},
        {"beta", L.beta},
        {"dt", L.dt},
        {"steps", L.steps},
        {"particles", L.particles},
        {"init_mean", L.init_mean},
        {"init_std", L.init_std},
        {"seed", L.seed},
        {"record_every", L.record_every},
        {"lo", L.lo},
        {"hi", L.hi},
        {"cells", L.cells}}},
      {"fokker_planck",
       {{"potential", potential_json(F.potential)},
        {"beta", F.beta},
        {"lo", F.lo},
        {"hi", F.hi},
        {"cells", F.cells},
        {"dt", F.dt},
        {"steps", F.steps},
        {"record_every", F.record_every},
        {"initial", F.initial},
        {"init_mean", F.init_mean},
        {"init_std", F.init_std},
        {"init_left", F.init_left},
        {"init_right", F.init_right}}},
      {"scaling",
       {{"model",
         {{"a", S.model.a},
          {"b", S.model.b},
          {"alpha", S.model.alpha},
          {"gamma", S.model.gamma_exp},
          {"q", S.model.q},
          {"L_inf", S.model.L_inf}}},
        {"scales", S.scales},
        {"noise_rel", S.noise_rel},
        {"seed", S.seed},
        {"trajectories", trajectories}}},
      {"memory",
       {{"N", M.N},
        {"load_ratios", M.load_ratios},
        {"seeds", M.seeds},
        {"base_seed", M.base_seed},
        {"flip_fraction", M.flip_fraction},
        {"T", M.T},
        {"retrieval_threshold", M.retrieval_threshold},
        {"tau_r", M.tau_r},
        {"dynamics", {{"mode", to_string(M.dynamics.mode)}, {"gain", M.dynamics.gain}, {"dt", M.dynamics.dt}}}}},
      {"output_dir", cfg.output_dir},
      {"plots", cfg.plots}};
  return root.dump(2) + "\n";
}

}  // namespace erlab
