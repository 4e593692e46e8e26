#include "erlab/langevin.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "erlab/csv.hpp"
#include "erlab/errors.hpp"
#include "erlab/rng.hpp"

namespace erlab {

Potential quadratic_potential(int dim, double stiffness) {
  Potential p;
  p.name = "quadratic";
  p.dim = dim;
  p.value = [stiffness](const Vector& x) { return 0.5 * stiffness * x.squaredNorm(); };
  p.gradient = [stiffness](const Vector& x) -> Vector { return stiffness * x; };
  p.laplacian = [stiffness](const Vector& x) { return stiffness * static_cast<double>(x.size()); };
  p.gradient_rows = [stiffness](const Matrix& x) -> Matrix { return stiffness * x; };
  return p;
}

Potential double_well_potential(int dim, double barrier) {
  Potential p;
  p.name = "double_well";
  p.dim = dim;
  p.value = [barrier](const Vector& x) { return barrier * (x.array().square() - 1.0).square().sum(); };
  p.gradient = [barrier](const Vector& x) -> Vector {
    return (4.0 * barrier * x.array() * (x.array().square() - 1.0)).matrix();
  };
  p.laplacian = [barrier](const Vector& x) { return (4.0 * barrier * (3.0 * x.array().square() - 1.0)).sum(); };
  p.gradient_rows = [barrier](const Matrix& x) -> Matrix {
    return (4.0 * barrier * x.array() * (x.array().square() - 1.0)).matrix();
  };
  return p;
}

void ParticleEnsemble::validate() const {
  if (positions.rows() < 1) throw ValidationError("ensemble needs at least one particle");
  if (!(beta >= 0.0)) throw ValidationError("ensemble beta must be >= 0");
  if (!positions.allFinite()) throw NumericalError("ensemble has non-finite positions");
}

void langevin_advance(ParticleEnsemble& ens, const Potential& pot, double dt, std::uint64_t seed) {
  if (!(dt > 0.0)) throw ValidationError("langevin dt must be > 0");
  if (ens.positions.cols() != pot.dim) throw DimensionError("ensemble dimension differs from the potential's");
  const Matrix grad = pot.gradient_rows(ens.positions);
  ens.positions -= dt * grad;

  if (ens.beta > 0.0) {
    const double amp = std::sqrt(2.0 * ens.beta * dt);
    const Eigen::Index d = ens.positions.cols();
    const Eigen::Index total = ens.positions.size();
    auto at = [&](Eigen::Index k) -> double& { return d == 1 ? ens.positions(k, 0) : ens.positions(k / d, k % d); };
    for (Eigen::Index k = 0; k < total; k += 2) {
      const auto z = normal_pair(seed, ens.step, static_cast<std::uint64_t>(k / 2));
      at(k) += amp * z[0];
      if (k + 1 < total) at(k + 1) += amp * z[1];
    }
  }
  ens.time += dt;
  ++ens.step;
  if (!ens.positions.allFinite()) {
    throw NumericalError("Langevin blow-up at step " + std::to_string(ens.step) + " (dt = " + format_double(dt) +
                         "); reduce dt below ~1/max curvature");
  }
}

ParticleEnsemble langevin_step(const ParticleEnsemble& ens, const Potential& pot, double dt, std::uint64_t seed) {
  ParticleEnsemble next = ens;
  langevin_advance(next, pot, dt, seed);
  return next;
}

double stationary_variance_check(double beta, double dt, int burn_in, int n_particles, std::uint64_t seed,
                                 double stiffness) {
  if (burn_in < 1) throw ValidationError("burn-in must be >= 1 step");
  if (n_particles < 2) throw ValidationError("variance needs at least 2 particles");
  ParticleEnsemble ens;
  ens.positions = Matrix::Zero(n_particles, 1);
  ens.beta = beta;
  const Potential pot = quadratic_potential(1, stiffness);
  for (int s = 0; s < burn_in; ++s) langevin_advance(ens, pot, dt, seed);
  const auto x = ens.positions.col(0).array();
  return (x - x.mean()).square().sum() / static_cast<double>(n_particles - 1);
}

DensityGrid histogram_density(const ParticleEnsemble& ens, double lo, double hi, int m) {
  if (ens.positions.cols() != 1) throw DimensionError("histogram estimates are 1-D only");
  if (!(hi > lo) || m < 1) throw ValidationError("histogram needs hi > lo and m >= 1");
  DensityGrid g;
  g.lo = lo;
  g.hi = hi;
  g.rho = Vector::Zero(m);
  const double dx = g.dx();
  const double weight = 1.0 / (static_cast<double>(ens.positions.rows()) * dx);
  for (Eigen::Index i = 0; i < ens.positions.rows(); ++i) {
    const double x = ens.positions(i, 0);
    if (!(x >= lo && x < hi)) continue;
    const auto cell = std::min<Eigen::Index>(static_cast<Eigen::Index>((x - lo) / dx), m - 1);
    g.rho(cell) += weight;
  }
  return g;
}

double free_energy(const ParticleEnsemble& ens, const Potential& pot, double beta, double lo, double hi, int m) {
  if (ens.positions.rows() < 100) throw ValidationError("particle free energy needs N >= 100");
  return free_energy(histogram_density(ens, lo, hi, m), pot, beta);
}

LangevinRun run_langevin(ParticleEnsemble ens, const Potential& pot, double dt, int steps, std::uint64_t seed,
                         int record_every, double lo, double hi, int m) {
  if (record_every < 1) throw ValidationError("record_every must be >= 1");
  ens.validate();
  LangevinRun run;
  run.records.push_back(describe(histogram_density(ens, lo, hi, m), pot, ens.beta, ens.time));
  for (int s = 1; s <= steps; ++s) {
    langevin_advance(ens, pot, dt, seed);
    if (s % record_every == 0 || s == steps)
      run.records.push_back(describe(histogram_density(ens, lo, hi, m), pot, ens.beta, ens.time));
  }
  run.final_state = std::move(ens);
  return run;
}

}  // namespace erlab
