#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "erlab/dynamics.hpp"

namespace erlab {

/// Injection I(S) = a S^alpha, dissipation D(S) = b S^gamma, response
/// Psi(r) = r^-q, so L(S) - L_inf = ((a / b) S^(alpha - gamma))^-q.
struct ScalingModel {
  double a = 1.0;
  double b = 1.0;
  double alpha = 1.0;
  double gamma_exp = 0.5;
  double q = 0.5;
  double L_inf = 0.0;

  /// kappa = q (alpha - gamma).
  double kappa() const { return q * (alpha - gamma_exp); }
  double ratio(double S) const;
  void validate() const;
  bool operator==(const ScalingModel&) const = default;
};

double excess_loss(double S, const ScalingModel& m);

struct PowerLawFit {
  double kappa_hat = 0.0;
  double amplitude = 0.0;  ///< excess ~ amplitude * S^-kappa_hat
  double r_squared = 0.0;
  int used = 0;
  int excluded = 0;
};

/// Least squares in log-log coordinates. Samples with excess <= 0 are dropped
/// with a warning; fewer than 3 usable samples is a ValidationError.
PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& samples);

/// Noiseless samples times (1 + noise_rel * z), z standard normal.
std::vector<std::pair<double, double>> scaling_samples(const ScalingModel& m, const std::vector<double>& scales,
                                                       double noise_rel = 0.0, std::uint64_t seed = 0);

/// S values spaced evenly in log between lo and hi.
std::vector<double> log_spaced(double lo, double hi, int count);

struct RatioTrace {
  double mean_I = 0.0;
  double mean_D = 0.0;
  double ratio = 0.0;  ///< NaN when undefined
  bool defined = false;
};

/// Time averages of I and D over the last half of the trajectory.
/// Undefined when D vanishes there.
RatioTrace empirical_ratio_trace(const Trajectory& trajectory);

struct ScalingRow {
  double S = 0.0;
  double excess = 0.0;
  double kappa_hat_running = 0.0;  ///< NaN until 3 usable samples
};

/// Running fit over the samples in order.
std::vector<ScalingRow> scaling_table(const std::vector<std::pair<double, double>>& samples);

/// Header S,excess,kappa_hat_running.
void write_scaling_csv(std::ostream& os, const std::vector<ScalingRow>& rows);
std::vector<ScalingRow> read_scaling_csv(std::istream& is);

}  // namespace erlab
