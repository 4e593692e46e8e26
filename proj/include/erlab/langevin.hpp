#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "erlab/linalg.hpp"

namespace erlab {

/// Potential U with gradient and Laplacian. `gradient_rows` maps an N x d
/// matrix of positions to the N x d matrix of gradients in one call.
struct Potential {
  std::string name;
  int dim = 1;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<double(const Vector&)> laplacian;
  std::function<Matrix(const Matrix&)> gradient_rows;

  double value_at(double x) const { return value(Vector::Constant(1, x)); }
  double laplacian_at(double x) const { return laplacian(Vector::Constant(1, x)); }
};

/// U = k/2 ||theta||^2.
Potential quadratic_potential(int dim = 1, double stiffness = 1.0);
/// U = h sum_i (theta_i^2 - 1)^2.
Potential double_well_potential(int dim = 1, double barrier = 1.0);

struct ParticleEnsemble {
  Matrix positions;  ///< N x d
  double beta = 1.0;
  double time = 0.0;
  std::uint64_t step = 0;

  void validate() const;
};

/// Euler-Maruyama: theta <- theta - grad U dt + sqrt(2 beta dt) xi. The noise
/// for particle coordinate k at step s is the Philox draw (seed, s, k / 2), so a
/// run is reproducible and independent of how the loop is partitioned.
void langevin_advance(ParticleEnsemble& ens, const Potential& pot, double dt, std::uint64_t seed);
ParticleEnsemble langevin_step(const ParticleEnsemble& ens, const Potential& pot, double dt, std::uint64_t seed);

/// Sample variance (pooled over coordinates) of an ensemble started at the
/// origin after `burn_in` steps on the quadratic potential.
double stationary_variance_check(double beta, double dt, int burn_in, int n_particles, std::uint64_t seed,
                                 double stiffness = 1.0);

/// Cell-centred density on [lo, hi] with m cells.
struct DensityGrid {
  double lo = -8.0;
  double hi = 8.0;
  Vector rho;
  /// Number of fp_step calls that had to clip negative cells.
  std::size_t clip_events = 0;

  Eigen::Index cells() const { return rho.size(); }
  double dx() const { return (hi - lo) / static_cast<double>(rho.size()); }
  double center(Eigen::Index i) const { return lo + (static_cast<double>(i) + 0.5) * dx(); }
  double mass() const { return rho.sum() * dx(); }
  void validate() const;
};

DensityGrid gaussian_density(double lo, double hi, int m, double mean, double stddev);
DensityGrid uniform_density(double lo, double hi, int m);
/// Equal-weight mixture of two Gaussians.
DensityGrid bimodal_density(double lo, double hi, int m, double left, double right, double stddev);
/// Discrete Gibbs density exp(-U/beta) / Z on the cell centres.
DensityGrid gibbs_density(double lo, double hi, int m, const Potential& pot, double beta);

/// Explicit finite-volume solver for d rho/dt = d/dx(rho U') + beta d2 rho/dx2
/// with no-flux walls. Interface fluxes use the Scharfetter-Gummel form, whose
/// discrete equilibrium is exactly the cell-centred Gibbs density.
class FokkerPlanck1D {
 public:
  FokkerPlanck1D(double lo, double hi, int m, const Potential& pot, double beta);

  /// min(dx^2 / (2 beta + dx max|U'|), 1 / max cell outflow rate).
  double stability_limit() const { return limit_; }
  /// Throws StabilityError when dt exceeds the stability limit.
  void step(DensityGrid& grid, double dt) const;

 private:
  double lo_, hi_, dx_, limit_;
  Vector right_rate_;  ///< rate from cell i into i+1
  Vector left_rate_;   ///< rate from cell i+1 into i
};

DensityGrid fp_step(const DensityGrid& grid, const Potential& pot, double beta, double dt);

/// int U rho + beta int rho log rho as cell sums.
double free_energy(const DensityGrid& grid, const Potential& pot, double beta);
/// Histogram estimate on [lo, hi] with m bins; needs N >= 100 and d = 1.
double free_energy(const ParticleEnsemble& ens, const Potential& pot, double beta, double lo, double hi, int m);
DensityGrid histogram_density(const ParticleEnsemble& ens, double lo, double hi, int m);
/// -int rho log rho.
double shannon_entropy(const DensityGrid& grid);

struct DissipationReport {
  double max_uphill = 0.0;
  double slack = 0.0;
  bool passed = true;
};

/// Largest increase of the free energy between consecutive snapshots; passes
/// when it stays within 1e-8 + 1e-4 dt.
DissipationReport dissipation_check(const std::vector<DensityGrid>& history, const Potential& pot, double beta,
                                    double dt);

struct EntropyProduction {
  double drift = 0.0;      ///< -int rho Laplacian U
  double diffusion = 0.0;  ///< beta int rho |d log rho|^2
  double total() const { return drift + diffusion; }
};

/// Cells with rho < 1e-300 are skipped; log-density slopes use centred
/// differences (one-sided at the walls).
EntropyProduction entropy_production_terms(const DensityGrid& grid, const Potential& pot, double beta);

/// One row of the run export.
struct DensityRecord {
  double t = 0.0;
  double free_energy = 0.0;
  double entropy = 0.0;
  double drift_term = 0.0;
  double diffusion_term = 0.0;
  double mass = 0.0;
};

DensityRecord describe(const DensityGrid& grid, const Potential& pot, double beta, double t);

struct FokkerPlanckRun {
  std::vector<DensityRecord> records;
  std::vector<DensityGrid> snapshots;  ///< every recorded state, including the first and last
};

FokkerPlanckRun run_fokker_planck(DensityGrid grid, const Potential& pot, double beta, double dt, int steps,
                                  int record_every = 1);

struct LangevinRun {
  std::vector<DensityRecord> records;
  ParticleEnsemble final_state;
};

/// Records histogram-based estimates on the given binning every record_every steps.
LangevinRun run_langevin(ParticleEnsemble ens, const Potential& pot, double dt, int steps, std::uint64_t seed,
                         int record_every, double lo, double hi, int m);

/// Header t,free_energy,entropy,drift_term,diffusion_term,mass.
void write_density_records_csv(std::ostream& os, const std::vector<DensityRecord>& records);
/// Header theta,rho.
void write_density_snapshot_csv(std::ostream& os, const DensityGrid& grid);

}  // namespace erlab
