#include "erlab/langevin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "erlab/csv.hpp"
#include "erlab/errors.hpp"
#include "erlab/log.hpp"

namespace erlab {
namespace {

constexpr double kTiny = 1e-300;

// Bernoulli function x / (e^x - 1).
double bernoulli(double x) {
  if (std::abs(x) < 1e-10) return 1.0 - 0.5 * x;
  return x / std::expm1(x);
}

void check_grid_shape(double lo, double hi, int m) {
  if (!(hi > lo)) throw ValidationError("density grid needs hi > lo");
  if (m < 2) throw ValidationError("density grid needs at least 2 cells");
}

DensityGrid normalized(double lo, double hi, Vector rho) {
  DensityGrid g;
  g.lo = lo;
  g.hi = hi;
  g.rho = std::move(rho);
  const double mass = g.mass();
  if (!(mass > 0.0) || !std::isfinite(mass)) throw NumericalError("density has zero or non-finite mass");
  g.rho /= mass;
  return g;
}

double rho_log_rho(double r) { return r > kTiny ? r * std::log(r) : 0.0; }

}  // namespace

void DensityGrid::validate() const {
  check_grid_shape(lo, hi, static_cast<int>(rho.size()));
  if (!rho.allFinite()) throw ValidationError("density has non-finite cells");
  if (rho.minCoeff() < 0.0) throw ValidationError("density has negative cells");
  if (std::abs(mass() - 1.0) > 1e-8) throw ValidationError("density mass is " + format_double(mass()) + ", not 1");
}

DensityGrid gaussian_density(double lo, double hi, int m, double mean, double stddev) {
  check_grid_shape(lo, hi, m);
  if (!(stddev > 0.0)) throw ValidationError("gaussian density needs stddev > 0");
  const double dx = (hi - lo) / m;
  Vector rho(m);
  for (int i = 0; i < m; ++i) {
    const double z = (lo + (i + 0.5) * dx - mean) / stddev;
    rho(i) = std::exp(-0.5 * z * z);
  }
  return normalized(lo, hi, std::move(rho));
}

DensityGrid uniform_density(double lo, double hi, int m) {
  check_grid_shape(lo, hi, m);
  return normalized(lo, hi, Vector::Ones(m));
}

DensityGrid bimodal_density(double lo, double hi, int m, double left, double right, double stddev) {
  const DensityGrid a = gaussian_density(lo, hi, m, left, stddev);
  const DensityGrid b = gaussian_density(lo, hi, m, right, stddev);
  return normalized(lo, hi, 0.5 * (a.rho + b.rho));
}

DensityGrid gibbs_density(double lo, double hi, int m, const Potential& pot, double beta) {
  check_grid_shape(lo, hi, m);
  if (!(beta > 0.0)) throw ValidationError("Gibbs density needs beta > 0");
  const double dx = (hi - lo) / m;
  Vector u(m);
  for (int i = 0; i < m; ++i) u(i) = pot.value_at(lo + (i + 0.5) * dx);
  return normalized(lo, hi, (-(u.array() - u.minCoeff()) / beta).exp().matrix());
}

FokkerPlanck1D::FokkerPlanck1D(double lo, double hi, int m, const Potential& pot, double beta)
    : lo_(lo), hi_(hi), dx_((hi - lo) / m), limit_(0.0) {
  check_grid_shape(lo, hi, m);
  if (pot.dim != 1) throw DimensionError("Fokker-Planck solver is 1-D only");
  if (!(beta >= 0.0)) throw ValidationError("Fokker-Planck beta must be >= 0");

  Vector u(m);
  double max_slope = 0.0;
  for (int i = 0; i < m; ++i) {
    const Vector x = Vector::Constant(1, lo + (i + 0.5) * dx_);
    u(i) = pot.value(x);
    max_slope = std::max(max_slope, std::abs(pot.gradient(x)(0)));
  }

  const double inv_dx2 = 1.0 / (dx_ * dx_);
  right_rate_.resize(m - 1);
  left_rate_.resize(m - 1);
  for (int i = 0; i + 1 < m; ++i) {
    const double du = u(i + 1) - u(i);
    if (beta > 0.0) {
      right_rate_(i) = beta * inv_dx2 * bernoulli(du / beta);
      left_rate_(i) = beta * inv_dx2 * bernoulli(-du / beta);
    } else {
      right_rate_(i) = std::max(-du, 0.0) * inv_dx2;
      left_rate_(i) = std::max(du, 0.0) * inv_dx2;
    }
  }

  double max_outflow = 0.0;
  for (int i = 0; i < m; ++i) {
    const double out = (i + 1 < m ? right_rate_(i) : 0.0) + (i > 0 ? left_rate_(i - 1) : 0.0);
    max_outflow = std::max(max_outflow, out);
  }
  const double denom = 2.0 * beta + dx_ * max_slope;
  limit_ = denom > 0.0 ? dx_ * dx_ / denom : std::numeric_limits<double>::infinity();
  if (max_outflow > 0.0) limit_ = std::min(limit_, 1.0 / max_outflow);
}

void FokkerPlanck1D::step(DensityGrid& grid, double dt) const {
  const Eigen::Index m = right_rate_.size() + 1;
  if (grid.cells() != m || grid.lo != lo_ || grid.hi != hi_) throw DimensionError("grid does not match the solver");
  if (!(dt > 0.0)) throw ValidationError("Fokker-Planck dt must be > 0");
  if (dt > limit_) {
    throw StabilityError("dt = " + format_double(dt) + " exceeds the stability limit " + format_double(limit_), limit_);
  }
  Vector& rho = grid.rho;
  Vector flux(m - 1);
  for (Eigen::Index i = 0; i + 1 < m; ++i) flux(i) = dt * (rho(i) * right_rate_(i) - rho(i + 1) * left_rate_(i));
  rho.head(m - 1) -= flux;
  rho.tail(m - 1) += flux;

  if (rho.minCoeff() < 0.0) {
    const double before = rho.sum();
    rho = rho.cwiseMax(0.0);
    rho *= before / rho.sum();
    ++grid.clip_events;
    warn("Fokker-Planck step clipped negative density (event " + std::to_string(grid.clip_events) + ")");
  }
}

DensityGrid fp_step(const DensityGrid& grid, const Potential& pot, double beta, double dt) {
  DensityGrid next = grid;
  FokkerPlanck1D(grid.lo, grid.hi, static_cast<int>(grid.cells()), pot, beta).step(next, dt);
  return next;
}

double free_energy(const DensityGrid& grid, const Potential& pot, double beta) {
  double energy = 0.0;
  double neg_entropy = 0.0;
  for (Eigen::Index i = 0; i < grid.cells(); ++i) {
    const double r = grid.rho(i);
    if (r <= 0.0) continue;
    energy += pot.value_at(grid.center(i)) * r;
    neg_entropy += rho_log_rho(r);
  }
  return (energy + (beta == 0.0 ? 0.0 : beta * neg_entropy)) * grid.dx();
}

double shannon_entropy(const DensityGrid& grid) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < grid.cells(); ++i) s -= rho_log_rho(grid.rho(i));
  return s * grid.dx();
}

DissipationReport dissipation_check(const std::vector<DensityGrid>& history, const Potential& pot, double beta,
                                    double dt) {
  DissipationReport report;
  report.slack = 1e-8 + 1e-4 * dt;
  for (std::size_t t = 1; t < history.size(); ++t) {
    const double rise = free_energy(history[t], pot, beta) - free_energy(history[t - 1], pot, beta);
    report.max_uphill = std::max(report.max_uphill, rise);
  }
  report.passed = report.max_uphill <= report.slack;
  return report;
}

EntropyProduction entropy_production_terms(const DensityGrid& grid, const Potential& pot, double beta) {
  EntropyProduction out;
  const Eigen::Index m = grid.cells();
  const double dx = grid.dx();
  auto alive = [&](Eigen::Index i) { return i >= 0 && i < m && grid.rho(i) >= kTiny; };
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!alive(i)) continue;
    const double r = grid.rho(i);
    out.drift -= r * pot.laplacian_at(grid.center(i)) * dx;
    if (beta == 0.0) continue;
    double slope = 0.0;
    if (alive(i - 1) && alive(i + 1)) {
      slope = (std::log(grid.rho(i + 1)) - std::log(grid.rho(i - 1))) / (2.0 * dx);
    } else if (alive(i + 1)) {
      slope = (std::log(grid.rho(i + 1)) - std::log(r)) / dx;
    } else if (alive(i - 1)) {
      slope = (std::log(r) - std::log(grid.rho(i - 1))) / dx;
    }
    out.diffusion += beta * r * slope * slope * dx;
  }
  return out;
}

DensityRecord describe(const DensityGrid& grid, const Potential& pot, double beta, double t) {
  const EntropyProduction ep = entropy_production_terms(grid, pot, beta);
  return {t, free_energy(grid, pot, beta), shannon_entropy(grid), ep.drift, ep.diffusion, grid.mass()};
}

FokkerPlanckRun run_fokker_planck(DensityGrid grid, const Potential& pot, double beta, double dt, int steps,
                                  int record_every) {
  if (steps < 0) throw ValidationError("steps must be >= 0");
  if (record_every < 1) throw ValidationError("record_every must be >= 1");
  grid.validate();
  const FokkerPlanck1D solver(grid.lo, grid.hi, static_cast<int>(grid.cells()), pot, beta);
  FokkerPlanckRun run;
  run.records.push_back(describe(grid, pot, beta, 0.0));
  run.snapshots.push_back(grid);
  for (int s = 1; s <= steps; ++s) {
    solver.step(grid, dt);
    if (s % record_every == 0 || s == steps) {
      run.records.push_back(describe(grid, pot, beta, s * dt));
      run.snapshots.push_back(grid);
    }
  }
  return run;
}

void write_density_records_csv(std::ostream& os, const std::vector<DensityRecord>& records) {
  os << "t,free_energy,entropy,drift_term,diffusion_term,mass\n";
  for (const auto& r : records) {
    os << format_double(r.t) << ',' << format_double(r.free_energy) << ',' << format_double(r.entropy) << ','
       << format_double(r.drift_term) << ',' << format_double(r.diffusion_term) << ',' << format_double(r.mass)
       << '\n';
  }
}

void write_density_snapshot_csv(std::ostream& os, const DensityGrid& grid) {
  os << "theta,rho\n";
  for (Eigen::Index i = 0; i < grid.cells(); ++i) os << format_double(grid.center(i)) << ',' << format_double(grid.rho(i)) << '\n';
}

}  // namespace erlab
