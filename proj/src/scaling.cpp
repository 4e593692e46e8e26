#include "erlab/scaling.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "erlab/csv.hpp"
#include "erlab/errors.hpp"
#include "erlab/log.hpp"
#include "erlab/rng.hpp"

namespace erlab {

void ScalingModel::validate() const {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("scaling amplitudes a and b must be > 0");
  if (!(alpha >= 0.0) || !(gamma_exp >= 0.0)) throw ValidationError("scaling exponents alpha and gamma must be >= 0");
  if (!(q > 0.0)) throw ValidationError("response exponent q must be > 0");
  if (!std::isfinite(L_inf)) throw ValidationError("L_inf must be finite");
}

double ScalingModel::ratio(double S) const { return a / b * std::pow(S, alpha - gamma_exp); }

double excess_loss(double S, const ScalingModel& m) {
  if (!(S > 0.0)) throw ValidationError("scale S must be > 0");
  return std::pow(m.ratio(S), -m.q);
}

PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& samples) {
  std::vector<double> xs, ys;
  PowerLawFit fit;
  for (const auto& [S, excess] : samples) {
    if (!(S > 0.0)) throw ValidationError("power-law fit needs S > 0, got " + format_double(S));
    if (!(excess > 0.0)) {
      ++fit.excluded;
      continue;
    }
    xs.push_back(std::log(S));
    ys.push_back(std::log(excess));
  }
  if (fit.excluded > 0) warn("power-law fit dropped " + std::to_string(fit.excluded) + " non-positive excess samples");
  if (xs.size() < 3) throw ValidationError("power-law fit needs >= 3 samples with positive excess");
  const LineFit line = fit_line(Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                                Eigen::Map<const Vector>(ys.data(), static_cast<Eigen::Index>(ys.size())));
  fit.kappa_hat = -line.slope;
  fit.amplitude = std::exp(line.intercept);
  fit.r_squared = line.r_squared;
  fit.used = static_cast<int>(xs.size());
  return fit;
}

std::vector<std::pair<double, double>> scaling_samples(const ScalingModel& m, const std::vector<double>& scales,
                                                       double noise_rel, std::uint64_t seed) {
  m.validate();
  CounterRng rng(seed, 0x5CA1);
  std::vector<std::pair<double, double>> out;
  out.reserve(scales.size());
  for (double S : scales) {
    double e = excess_loss(S, m);
    if (noise_rel != 0.0) e *= 1.0 + noise_rel * rng.normal();
    out.emplace_back(S, e);
  }
  return out;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw ValidationError("log_spaced needs 0 < lo < hi and count >= 2");
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1));
  return out;
}

RatioTrace empirical_ratio_trace(const Trajectory& trajectory) {
  if (trajectory.empty()) throw ValidationError("ratio trace needs a non-empty trajectory");
  RatioTrace out;
  const std::size_t start = trajectory.size() / 2;
  for (std::size_t t = start; t < trajectory.size(); ++t) {
    out.mean_I += trajectory[t].I_inj;
    out.mean_D += trajectory[t].D_diss;
  }
  const double n = static_cast<double>(trajectory.size() - start);
  out.mean_I /= n;
  out.mean_D /= n;
  out.defined = out.mean_D > 0.0;
  out.ratio = out.defined ? out.mean_I / out.mean_D : std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::vector<ScalingRow> scaling_table(const std::vector<std::pair<double, double>>& samples) {
  std::vector<ScalingRow> rows;
  std::vector<std::pair<double, double>> seen;
  int usable = 0;
  for (const auto& s : samples) {
    seen.push_back(s);
    if (s.second > 0.0) ++usable;
    double k = std::numeric_limits<double>::quiet_NaN();
    if (usable >= 3) k = fit_power_law(seen).kappa_hat;
    rows.push_back({s.first, s.second, k});
  }
  return rows;
}

void write_scaling_csv(std::ostream& os, const std::vector<ScalingRow>& rows) {
  os << "S,excess,kappa_hat_running\n";
  for (const auto& r : rows)
    os << format_double(r.S) << ',' << format_double(r.excess) << ',' << format_double(r.kappa_hat_running) << '\n';
}

std::vector<ScalingRow> read_scaling_csv(std::istream& is) {
  const CsvTable table = read_csv(is);
  std::vector<ScalingRow> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    rows.push_back({table.number(i, "S"), table.number(i, "excess"), table.number(i, "kappa_hat_running")});
  return rows;
}

}  // namespace erlab
