#include "erlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "erlab/csv.hpp"
#include "erlab/rng.hpp"

namespace erlab {

namespace {

bool same(ad::Var a, ad::Var b) { return a.tape() == b.tape() && a.id() == b.id(); }

Vector leaf_grad(const ad::Var& theta) {
  const Matrix& g = theta.grad();
  if (g.size() == 0) return Vector::Zero(theta.value().size());
  return Eigen::Map<const Vector>(g.data(), g.size());
}

bool all_finite(const Vector& v) { return v.allFinite(); }

double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

std::string to_string(OmegaKind kind) { return kind == OmegaKind::None ? "none" : "l2"; }
std::string to_string(DecKind kind) { return kind == DecKind::None ? "none" : "quadratic_penalty"; }

OmegaKind parse_omega_kind(std::string_view text) {
  if (text == "none") return OmegaKind::None;
  if (text == "l2") return OmegaKind::L2;
  throw ValidationError("unknown omega kind '" + std::string(text) + "' (expected none|l2)");
}

DecKind parse_dec_kind(std::string_view text) {
  if (text == "none") return DecKind::None;
  if (text == "quadratic_penalty") return DecKind::QuadraticPenalty;
  throw ValidationError("unknown dec kind '" + std::string(text) + "' (expected none|quadratic_penalty)");
}

std::string to_string(ThresholdMode mode) {
  return mode == ThresholdMode::Absolute ? "absolute" : "relative_to_initial_loss_grad";
}

ThresholdMode parse_threshold_mode(std::string_view text) {
  if (text == "absolute") return ThresholdMode::Absolute;
  if (text == "relative_to_initial_loss_grad") return ThresholdMode::RelativeToInitialLossGrad;
  throw ValidationError("unknown c_mode '" + std::string(text) + "'");
}

void EnergyConfig::validate() const {
  if (!(beta >= 0.0)) throw ValidationError("energy.beta must be >= 0");
  if (!(gamma >= 0.0)) throw ValidationError("energy.gamma must be >= 0");
  if (!(lambda >= 0.0)) throw ValidationError("energy.lambda must be >= 0");
  surrogate.validate();
}

void EffectivenessConfig::validate() const {
  if (!(c > 0.0)) throw ValidationError("effectiveness.c must be > 0");
  if (!(tau > 0.0 && tau <= 1.0)) throw ValidationError("effectiveness.tau must lie in (0, 1]");
}

void GenBoundConfig::validate() const {
  if (!(A > 0.0)) throw ValidationError("gen_bound.A must be > 0");
  if (!(B_const >= 0.0)) throw ValidationError("gen_bound.B must be >= 0");
  if (!(sigma_subg > 0.0)) throw ValidationError("gen_bound.sigma must be > 0");
  if (n < 1) throw ValidationError("gen_bound.n must be >= 1");
}

ObjectiveTerms ModelObjective::build(ad::Tape& tape, ad::Var theta) const {
  auto out = forward(theta, tape.constant(batch_->x), spec_);
  ObjectiveTerms terms;
  terms.pred_loss = pred_loss(out.yhat, tape.constant(batch_->y), kind_);
  terms.representation = out.z;
  terms.prediction = out.yhat;
  return terms;
}

EnergyGraph build_energy(ad::Tape& tape, ad::Var theta, const Objective& objective, const EnergyConfig& cfg,
                         double beta, std::uint64_t noise_seed) {
  const ObjectiveTerms terms = objective.build(tape, theta);
  EnergyGraph g;
  g.pred_loss = terms.pred_loss;
  if (terms.entropy.valid()) {
    g.entropy = terms.entropy;
  } else if (terms.representation.valid()) {
    g.entropy = entropy_surrogate(noisy_rep(terms.representation, cfg.surrogate.sigma_xi, noise_seed), cfg.surrogate);
  } else {
    g.entropy = tape.scalar_constant(0.0);
  }

  g.omega = cfg.omega_kind == OmegaKind::L2 ? ad::scale(ad::sum_squares(theta), 0.5) : tape.scalar_constant(0.0);
  if (cfg.dec_kind == DecKind::QuadraticPenalty) {
    if (!terms.prediction.valid()) throw ValidationError("dec_kind quadratic_penalty needs an objective with predictions");
    g.dec = ad::scale(ad::mean(ad::square(terms.prediction)), 0.5);
  } else {
    g.dec = tape.scalar_constant(0.0);
  }

  g.loss = g.pred_loss;
  if (cfg.gamma != 0.0 && cfg.omega_kind != OmegaKind::None) g.loss = g.loss + cfg.gamma * g.omega;
  if (cfg.lambda != 0.0 && cfg.dec_kind != DecKind::None) g.loss = g.loss + cfg.lambda * g.dec;
  g.energy = beta != 0.0 ? g.loss + beta * g.entropy : g.loss;
  return g;
}

Vector Evaluation::grad_energy(double beta) const {
  if (beta == 0.0) return grad_loss;
  return grad_loss + beta * grad_entropy;
}

Evaluation evaluate(const Objective& objective, const ParamVector& theta, const EnergyConfig& cfg,
                    std::uint64_t noise_seed) {
  ad::Tape tape;
  auto th = tape.variable(theta);
  const EnergyGraph g = build_energy(tape, th, objective, cfg, 0.0, noise_seed);

  Evaluation ev;
  ev.pred_loss = g.pred_loss.scalar();
  ev.entropy = g.entropy.scalar();
  ev.omega = g.omega.scalar();
  ev.dec = g.dec.scalar();
  ev.loss = g.loss.scalar();

  tape.backward(g.loss);
  ev.grad_loss = leaf_grad(th);
  tape.zero_grad();
  tape.backward(g.entropy);
  ev.grad_entropy = leaf_grad(th);
  if (same(g.loss, g.pred_loss)) {
    ev.grad_pred = ev.grad_loss;
  } else {
    tape.zero_grad();
    tape.backward(g.pred_loss);
    ev.grad_pred = leaf_grad(th);
  }
  return ev;
}

double energy(const Objective& objective, const ParamVector& theta, const EnergyConfig& cfg,
              std::uint64_t noise_seed) {
  ad::Tape tape;
  auto th = tape.constant(theta);
  return build_energy(tape, th, objective, cfg, cfg.beta, noise_seed).energy.scalar();
}

InfoForce info_force(const Objective& objective, const ParamVector& theta, const EnergyConfig& cfg,
                     std::uint64_t noise_seed) {
  ad::Tape tape;
  auto th = tape.variable(theta);
  const EnergyGraph g = build_energy(tape, th, objective, cfg, cfg.beta, noise_seed);
  tape.backward(g.entropy);
  InfoForce f;
  f.grad_entropy = leaf_grad(th);
  f.norm = f.grad_entropy.norm();
  return f;
}

double metric_force_norm(const Vector& grad, const Matrix& metric) {
  if (metric.rows() != grad.size() || metric.cols() != grad.size())
    throw DimensionError("metric must be square with the gradient's dimension");
  Eigen::LLT<Matrix> llt(metric);
  if (llt.info() != Eigen::Success) throw FactorizationError("metric is not positive definite", -1, 0.0);
  const double q = grad.dot(llt.solve(grad));
  return std::sqrt(std::max(q, 0.0));
}

Matrix gauss_newton_metric(const Objective& objective, const ParamVector& theta, double delta) {
  if (!(delta > 0.0)) throw ValidationError("metric damping delta must be > 0");
  ad::Tape tape;
  auto th = tape.variable(theta);
  const ObjectiveTerms terms = objective.build(tape, th);
  if (!terms.prediction.valid()) throw ValidationError("metric force needs an objective with predictions");
  const Matrix& yhat = terms.prediction.value();
  Matrix jac(yhat.size(), theta.size());
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < yhat.rows(); ++i) {
    for (Eigen::Index j = 0; j < yhat.cols(); ++j) {
      Matrix seed = Matrix::Zero(yhat.rows(), yhat.cols());
      seed(i, j) = 1.0;
      tape.zero_grad();
      tape.backward(terms.prediction, seed);
      jac.row(row++) = leaf_grad(th).transpose();
    }
  }
  Matrix m = jac.transpose() * jac;
  m.diagonal().array() += delta;
  return m;
}

double info_force_metric(const Objective& objective, const ParamVector& theta, const EnergyConfig& cfg,
                         std::uint64_t noise_seed, double delta) {
  const InfoForce f = info_force(objective, theta, cfg, noise_seed);
  return metric_force_norm(f.grad_entropy, gauss_newton_metric(objective, theta, delta));
}

ParamVector gd_step(const Objective& objective, const ParamVector& theta, const EnergyConfig& cfg, double eta,
                    std::uint64_t noise_seed, int step) {
  if (!(eta > 0.0)) throw ValidationError("learning rate eta must be > 0");
  const Evaluation ev = evaluate(objective, theta, cfg, noise_seed);
  const Vector g = ev.grad_energy(cfg.beta);
  if (!all_finite(g)) throw DivergenceError("non-finite gradient at step " + std::to_string(step), step);
  ParamVector next = theta - eta * g;
  if (!all_finite(next)) throw DivergenceError("non-finite parameters at step " + std::to_string(step), step);
  return next;
}

InjectionDissipation injection_dissipation(const Objective& objective, const ParamVector& theta,
                                           const EnergyConfig& cfg, std::uint64_t noise_seed) {
  const Evaluation ev = evaluate(objective, theta, cfg, noise_seed);
  return {ev.injection(), ev.dissipation(cfg.beta)};
}

std::optional<double> critical_beta(const Evaluation& eval) {
  const double g = eval.info_force();
  if (!(g > kCriticalBetaTol)) return std::nullopt;
  return eval.injection() / (g * g);
}

std::optional<double> critical_beta(const Objective& objective, const ParamVector& theta, const EnergyConfig& cfg,
                                    std::uint64_t noise_seed) {
  return critical_beta(evaluate(objective, theta, cfg, noise_seed));
}

std::optional<double> degeneracy_ratio(const Evaluation& eval) {
  const double denom = eval.grad_pred.norm();
  if (!(denom > 1e-12)) return std::nullopt;
  return eval.info_force() / denom;
}

std::optional<double> degeneracy_ratio(const Objective& objective, const ParamVector& theta, const EnergyConfig& cfg,
                                       std::uint64_t noise_seed) {
  return degeneracy_ratio(evaluate(objective, theta, cfg, noise_seed));
}

Simulation simulate(const Objective& objective, ParamVector theta, const EnergyConfig& cfg, double eta, int steps,
                    std::uint64_t seed, const BetaSchedule& schedule) {
  if (!(eta > 0.0)) throw ValidationError("learning rate eta must be > 0");
  if (steps < 0) throw ValidationError("steps must be >= 0");
  Simulation sim;
  sim.trajectory.reserve(static_cast<std::size_t>(steps) + 1);
  for (int t = 0; t <= steps; ++t) {
    const Evaluation ev = evaluate(objective, theta, cfg, hash_seed({seed, static_cast<std::uint64_t>(t)}));
    const double beta = schedule ? schedule(t, ev) : cfg.beta;
    const Vector g = ev.grad_energy(beta);

    StepRecord rec;
    rec.t = t;
    rec.L_pred = ev.pred_loss;
    rec.H = ev.entropy;
    rec.F = ev.energy(beta);
    rec.G = ev.info_force();
    rec.I_inj = ev.injection();
    rec.D_diss = ev.dissipation(beta);
    rec.beta_t = beta;
    rec.grad_norm_L = ev.grad_pred.norm();
    rec.grad_norm_F = g.norm();
    sim.trajectory.push_back(rec);
    if (t == steps) break;

    theta -= eta * g;
    if (!all_finite(theta))
      throw DivergenceError("non-finite parameters at step " + std::to_string(t), t, sim.trajectory);
  }
  sim.theta = std::move(theta);
  return sim;
}

ParamVector plain_gd(const Objective& objective, ParamVector theta, double eta, int steps) {
  for (int t = 0; t < steps; ++t) {
    ad::Tape tape;
    auto th = tape.variable(theta);
    const ObjectiveTerms terms = objective.build(tape, th);
    tape.backward(terms.pred_loss);
    theta -= eta * leaf_grad(th);
  }
  return theta;
}

double entropy_flow_check(const Trajectory& trajectory, double eta) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
    const auto& a = trajectory[i];
    const auto& b = trajectory[i + 1];
    if (b.t != a.t + 1) continue;
    worst = std::max(worst, std::abs(b.H - a.H - eta * (a.I_inj - a.D_diss)));
  }
  return worst;
}

DescentReport descent_check(const Trajectory& trajectory, double eta, double l_smooth, double f_star, double slack) {
  (void)l_smooth;
  DescentReport r;
  if (trajectory.size() < 2) return r;
  r.min_grad_sq = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
    const auto& a = trajectory[i];
    const auto& b = trajectory[i + 1];
    const double g2 = a.grad_norm_F * a.grad_norm_F;
    r.min_grad_sq = std::min(r.min_grad_sq, g2);
    const double allowed = a.F - 0.5 * eta * g2 + slack * std::max(1.0, std::abs(a.F));
    if (b.F > allowed && !r.first_violation) r.first_violation = a.t;
  }
  const double steps = static_cast<double>(trajectory.size() - 1);
  r.bound = 2.0 * (trajectory.front().F - f_star) / (eta * steps);
  r.bound_holds = r.min_grad_sq <= r.bound * (1.0 + 1e-12) + 1e-300;
  r.passed = !r.first_violation && r.bound_holds;
  return r;
}

Effectiveness effectiveness(const Trajectory& trajectory, const EffectivenessConfig& cfg) {
  cfg.validate();
  if (trajectory.empty()) throw ValidationError("effectiveness needs a nonempty trajectory");
  Effectiveness e;
  e.threshold = cfg.c_mode == ThresholdMode::Absolute ? cfg.c : cfg.c * trajectory.front().grad_norm_L;
  const auto hits = std::count_if(trajectory.begin(), trajectory.end(),
                                  [&](const StepRecord& r) { return r.G >= e.threshold; });
  e.fraction = static_cast<double>(hits) / static_cast<double>(trajectory.size());
  e.effective = e.fraction >= cfg.tau;
  return e;
}

GenBound gen_bound(double h_logdet, const GenBoundConfig& cfg) {
  cfg.validate();
  double info = cfg.A * h_logdet + cfg.B_const;
  GenBound b;
  if (info < 0.0) {
    info = 0.0;
    b.clamped = true;
  }
  b.value = std::sqrt(2.0 * cfg.sigma_subg * cfg.sigma_subg * info / static_cast<double>(cfg.n));
  return b;
}

EntropyScaling entropy_scaling_diag(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) throw ValidationError("entropy scaling needs at least 3 samples");
  std::vector<double> xs, ys;
  EntropyScaling out;
  for (const auto& [n, h] : samples) {
    if (!(n >= 2.0)) throw ValidationError("entropy scaling samples need n >= 2");
    if (!(h > 0.0)) {
      ++out.excluded;
      continue;
    }
    xs.push_back(std::log(n));
    ys.push_back(std::log(h));
  }
  if (xs.size() < 2) throw ValidationError("entropy scaling: fewer than 2 samples with positive entropy");
  const LineFit fit = fit_line(Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                               Eigen::Map<const Vector>(ys.data(), static_cast<Eigen::Index>(ys.size())));
  out.alpha_hat = fit.slope;
  out.gap_exponent = (fit.slope - 1.0) / 2.0;
  out.non_vanishing_gap = fit.slope >= 1.0 - 1e-9;
  return out;
}

ForceBand force_stabilization_probe(const Trajectory& trajectory) {
  const std::size_t n = trajectory.size();
  if (n < 20) throw ValidationError("force stabilization probe needs at least 20 records");
  std::vector<double> g2(n);
  for (std::size_t i = 0; i < n; ++i) g2[i] = trajectory[i].G * trajectory[i].G;

  ForceBand out;
  out.sup_g2 = *std::max_element(g2.begin() + static_cast<std::ptrdiff_t>(n / 2), g2.end());
  out.band = percentile(std::vector<double>(g2.begin() + static_cast<std::ptrdiff_t>(n - n / 4), g2.end()), 0.9);

  const double ceiling = 1.1 * out.band;
  // Walk backwards: the entry point is the earliest in-band step whose suffix
  // never exceeds the ceiling.
  for (std::size_t i = n; i-- > 0;) {
    if (g2[i] > ceiling) break;
    if (g2[i] <= out.band) out.entry_time = trajectory[i].t;
  }
  out.entered_band = out.entry_time.has_value();
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
  os << "t,L_pred,H,F,G,I_inj,D_diss,beta_t,r_t,gen_gap,grad_norm_L\n";
  for (const auto& r : trajectory) {
    os << r.t << ',' << format_double(r.L_pred) << ',' << format_double(r.H) << ',' << format_double(r.F) << ','
       << format_double(r.G) << ',' << format_double(r.I_inj) << ',' << format_double(r.D_diss) << ','
       << format_double(r.beta_t) << ',' << format_double(r.r_t) << ','
       << (r.gen_gap ? format_double(*r.gen_gap) : std::string()) << ',' << format_double(r.grad_norm_L) << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& is) {
  const CsvTable table = read_csv(is);
  Trajectory out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    StepRecord r;
    r.t = static_cast<int>(table.number(i, "t"));
    r.L_pred = table.number(i, "L_pred");
    r.H = table.number(i, "H");
    r.F = table.number(i, "F");
    r.G = table.number(i, "G");
    r.I_inj = table.number(i, "I_inj");
    r.D_diss = table.number(i, "D_diss");
    r.beta_t = table.number(i, "beta_t");
    r.r_t = table.number(i, "r_t");
    r.gen_gap = table.optional_number(i, "gen_gap");
    r.grad_norm_L = table.number(i, "grad_norm_L");
    out.push_back(r);
  }
  return out;
}

}  // namespace erlab
