#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "erlab/models.hpp"
#include "erlab/surrogates.hpp"

namespace erlab {

enum class OmegaKind { None, L2 };
enum class DecKind { None, QuadraticPenalty };

std::string to_string(OmegaKind kind);
std::string to_string(DecKind kind);
OmegaKind parse_omega_kind(std::string_view text);
DecKind parse_dec_kind(std::string_view text);

/// Coefficients of F = L_pred + beta H + gamma Omega + lambda R_dec.
///
/// Omega "l2" is 1/2 ||theta||^2. R_dec "quadratic_penalty" is 1/2 the mean
/// squared prediction, which needs an objective that exposes its predictions.
struct EnergyConfig {
  double beta = 0.1;
  double gamma = 0.0;
  double lambda = 0.0;
  SurrogateConfig surrogate;
  OmegaKind omega_kind = OmegaKind::L2;
  DecKind dec_kind = DecKind::None;

  void validate() const;
  bool operator==(const EnergyConfig&) const = default;
};

/// Nodes an objective records for one parameter node. Exactly one of
/// `representation` (the surrogate is applied to its noisy version) or
/// `entropy` (used as H directly) should be set for H to be non-zero.
struct ObjectiveTerms {
  ad::Var pred_loss;
  ad::Var representation;
  ad::Var entropy;
  ad::Var prediction;
};

/// A differentiable problem over a flat parameter vector.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual ObjectiveTerms build(ad::Tape& tape, ad::Var theta) const = 0;
};

/// Encoder + prediction loss on a fixed batch.
class ModelObjective final : public Objective {
 public:
  ModelObjective(EncoderSpec spec, const Dataset& batch, TaskKind kind)
      : spec_(std::move(spec)), batch_(&batch), kind_(kind) {}

  ObjectiveTerms build(ad::Tape& tape, ad::Var theta) const override;

  const EncoderSpec& spec() const { return spec_; }
  const Dataset& batch() const { return *batch_; }
  TaskKind kind() const { return kind_; }

 private:
  EncoderSpec spec_;
  const Dataset* batch_;
  TaskKind kind_;
};

/// Objective from a callable; used for analytic test functionals.
class FunctionalObjective final : public Objective {
 public:
  using Builder = std::function<ObjectiveTerms(ad::Tape&, ad::Var)>;
  explicit FunctionalObjective(Builder builder) : builder_(std::move(builder)) {}
  ObjectiveTerms build(ad::Tape& tape, ad::Var theta) const override { return builder_(tape, theta); }

 private:
  Builder builder_;
};

struct EnergyGraph {
  ad::Var pred_loss;
  ad::Var entropy;  ///< 1 x 1 constant 0 when the objective has no entropy term.
  ad::Var omega;
  ad::Var dec;
  ad::Var loss;     ///< L_pred + gamma Omega + lambda R_dec (terms with zero weight are not recorded).
  ad::Var energy;   ///< loss + beta H.
};

EnergyGraph build_energy(ad::Tape& tape, ad::Var theta, const Objective& objective, const EnergyConfig& cfg,
                         double beta, std::uint64_t noise_seed);

/// Values and gradients of every term at one parameter point. Independent of
/// beta, so a controller can choose beta after seeing the forces.
struct Evaluation {
  double pred_loss = 0.0;
  double entropy = 0.0;
  double omega = 0.0;
  double dec = 0.0;
  double loss = 0.0;
  Vector grad_loss;
  Vector grad_entropy;
  Vector grad_pred;

  double energy(double beta) const { return loss + beta * entropy; }
  Vector grad_energy(double beta) const;
  double info_force() const { return grad_entropy.norm(); }
  double injection() const { return -grad_entropy.dot(grad_loss); }
  double dissipation(double beta) const { return beta * grad_entropy.squaredNorm(); }
};

Evaluation evaluate(const Objective& objective, const ParamVector& theta, const EnergyConfig& cfg,
                    std::uint64_t noise_seed);

/// F(theta) with cfg.beta.
double energy(const Objective& objective, const ParamVector& theta, const EnergyConfig& cfg, std::uint64_t noise_seed);

struct InfoForce {
  double norm = 0.0;
  Vector grad_entropy;
};

InfoForce info_force(const Objective& objective, const ParamVector& theta, const EnergyConfig& cfg,
                     std::uint64_t noise_seed);

/// sqrt(g^T M^{-1} g) via a Cholesky solve.
double metric_force_norm(const Vector& grad, const Matrix& metric);

/// Damped Gauss-Newton metric J^T J + delta I, J the Jacobian of the
/// objective's predictions with respect to theta.
Matrix gauss_newton_metric(const Objective& objective, const ParamVector& theta, double delta);

double info_force_metric(const Objective& objective, const ParamVector& theta, const EnergyConfig& cfg,
                         std::uint64_t noise_seed, double delta = 1e-3);

/// One record per logged step.
struct StepRecord {
  int t = 0;
  double L_pred = 0.0;
  double H = 0.0;
  double F = 0.0;
  double G = 0.0;
  double I_inj = 0.0;
  double D_diss = 0.0;
  double beta_t = 0.0;
  double r_t = 0.0;
  std::optional<double> gen_gap;
  double grad_norm_L = 0.0;
  /// ||grad F||; kept in memory for descent checks, not exported.
  double grad_norm_F = 0.0;
};

using Trajectory = std::vector<StepRecord>;

class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, int step, Trajectory partial = {})
      : NumericalError(what), step_(step), partial_(std::move(partial)) {}
  int step() const { return step_; }
  const Trajectory& partial() const { return partial_; }

 private:
  int step_;
  Trajectory partial_;
};

/// theta - eta grad F. Throws DivergenceError carrying `step` if the gradient
/// or the result is non-finite.
ParamVector gd_step(const Objective& objective, const ParamVector& theta, const EnergyConfig& cfg, double eta,
                    std::uint64_t noise_seed, int step = 0);

struct InjectionDissipation {
  double injection = 0.0;
  double dissipation = 0.0;
};

InjectionDissipation injection_dissipation(const Objective& objective, const ParamVector& theta,
                                           const EnergyConfig& cfg, std::uint64_t noise_seed);

inline constexpr double kCriticalBetaTol = 1e-12;

/// I / ||grad H||^2, or nullopt when ||grad H|| <= 1e-12. May be negative.
std::optional<double> critical_beta(const Evaluation& eval);
std::optional<double> critical_beta(const Objective& objective, const ParamVector& theta, const EnergyConfig& cfg,
                                    std::uint64_t noise_seed);

/// ||grad H|| / ||grad L_pred||, or nullopt when the denominator is <= 1e-12.
std::optional<double> degeneracy_ratio(const Evaluation& eval);
std::optional<double> degeneracy_ratio(const Objective& objective, const ParamVector& theta, const EnergyConfig& cfg,
                                       std::uint64_t noise_seed);

using BetaSchedule = std::function<double(int t, const Evaluation& eval)>;

struct Simulation {
  Trajectory trajectory;  ///< steps + 1 records; the last is the terminal state.
  ParamVector theta;
};

/// Full-batch gradient descent on F with a per-step beta. Records every step.
Simulation simulate(const Objective& objective, ParamVector theta, const EnergyConfig& cfg, double eta, int steps,
                    std::uint64_t seed, const BetaSchedule& schedule = {});

/// Gradient descent on L_pred alone, with no entropy, Omega, or R_dec nodes.
ParamVector plain_gd(const Objective& objective, ParamVector theta, double eta, int steps);

/// max_t |H_{t+1} - H_t - eta (I_t - D_t)| over consecutive records.
double entropy_flow_check(const Trajectory& trajectory, double eta);

struct DescentReport {
  bool passed = true;
  std::optional<int> first_violation;
  double min_grad_sq = 0.0;
  double bound = 0.0;  ///< 2 (F_0 - F*) / (eta T)
  bool bound_holds = true;
};

/// Checks F_{t+1} <= F_t - (eta/2)||grad F_t||^2 on every consecutive pair and
/// min_t ||grad F_t||^2 <= 2 (F_0 - F*) / (eta T) with T = number of pairs.
DescentReport descent_check(const Trajectory& trajectory, double eta, double l_smooth, double f_star,
                            double slack = 1e-12);

enum class ThresholdMode { Absolute, RelativeToInitialLossGrad };

std::string to_string(ThresholdMode mode);
ThresholdMode parse_threshold_mode(std::string_view text);

/// In relative mode the effective threshold is c * ||grad L_pred(theta_0)||.
struct EffectivenessConfig {
  double c = 0.05;
  double tau = 0.5;
  ThresholdMode c_mode = ThresholdMode::RelativeToInitialLossGrad;

  void validate() const;
  bool operator==(const EffectivenessConfig&) const = default;
};

struct Effectiveness {
  double fraction = 0.0;
  bool effective = false;
  double threshold = 0.0;
};

Effectiveness effectiveness(const Trajectory& trajectory, const EffectivenessConfig& cfg);

struct GenBoundConfig {
  double A = 1.0;
  double B_const = 0.0;
  double sigma_subg = 1.0;
  int n = 1;

  void validate() const;
  bool operator==(const GenBoundConfig&) const = default;
};

struct GenBound {
  double value = 0.0;
  bool clamped = false;
};

/// sqrt(2 sigma^2 (A H + B) / n), with A H + B clamped at zero.
GenBound gen_bound(double h_logdet, const GenBoundConfig& cfg);

struct EntropyScaling {
  double alpha_hat = 0.0;
  double gap_exponent = 0.0;
  bool non_vanishing_gap = false;  ///< alpha_hat >= 1
  int excluded = 0;
};

/// Log-log slope of H(n) against n. Non-positive H samples are dropped.
EntropyScaling entropy_scaling_diag(const std::vector<std::pair<double, double>>& samples);

struct ForceBand {
  double sup_g2 = 0.0;       ///< sup of G^2 over the last half
  double band = 0.0;         ///< 90th percentile of G^2 over the last quarter
  bool entered_band = false;
  std::optional<int> entry_time;
};

/// Finds the first step after which G^2 stays within 1.1 * band.
ForceBand force_stabilization_probe(const Trajectory& trajectory);

/// Header t,L_pred,H,F,G,I_inj,D_diss,beta_t,r_t,gen_gap,grad_norm_L with 17
/// significant digits; an absent gen_gap is an empty field.
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);
Trajectory read_trajectory_csv(std::istream& is);

}  // namespace erlab
