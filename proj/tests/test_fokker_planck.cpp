#include <doctest.h>

#include <cmath>
#include <sstream>

#include "erlab/csv.hpp"
#include "erlab/errors.hpp"
#include "erlab/langevin.hpp"
#include "erlab/log.hpp"

using namespace erlab;

namespace {

Potential constant_potential(double c) {
  Potential p;
  p.name = "constant";
  p.value = [c](const Vector&) { return c; };
  p.gradient = [](const Vector& x) -> Vector { return Vector::Zero(x.size()); };
  p.laplacian = [](const Vector&) { return 0.0; };
  p.gradient_rows = [](const Matrix& x) -> Matrix { return Matrix::Zero(x.rows(), x.cols()); };
  return p;
}

}  // namespace

TEST_CASE("density constructors are normalized") {
  const Potential q = quadratic_potential();
  for (const DensityGrid& g : {gaussian_density(-8, 8, 400, 1.0, 0.5), uniform_density(-2, 3, 17),
                               bimodal_density(-8, 8, 300, -2, 2, 0.5), gibbs_density(-8, 8, 400, q, 0.5)}) {
    CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_NOTHROW(g.validate());
  }
  CHECK_THROWS_AS(gaussian_density(1, -1, 10, 0, 1), ValidationError);
  CHECK_THROWS_AS(gibbs_density(-1, 1, 10, q, 0.0), ValidationError);
  DensityGrid bad = uniform_density(0, 1, 4);
  bad.rho(0) = -1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("the Gibbs density is stationary") {
  const Potential q = quadratic_potential();
  const DensityGrid g = gibbs_density(-8, 8, 400, q, 1.0);
  const FokkerPlanck1D solver(-8, 8, 400, q, 1.0);
  DensityGrid next = g;
  solver.step(next, 0.9 * solver.stability_limit());
  const double dx = g.dx();
  CHECK((next.rho - g.rho).lpNorm<Eigen::Infinity>() <= dx * dx);
  CHECK((next.rho - g.rho).lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("flat profile under a constant potential is unchanged") {
  const Potential c = constant_potential(3.0);
  DensityGrid g = uniform_density(-1, 1, 50);
  const FokkerPlanck1D solver(-1, 1, 50, c, 0.8);
  for (int s = 0; s < 100; ++s) solver.step(g, solver.stability_limit());
  CHECK((g.rho.array() - 0.5).abs().maxCoeff() <= 1e-14);
}

TEST_CASE("mass is conserved") {
  for (const Potential& pot : {quadratic_potential(), double_well_potential()}) {
    const FokkerPlanck1D solver(-4, 4, 200, pot, 0.3);
    DensityGrid g = gaussian_density(-4, 4, 200, 1.5, 0.4);
    for (int s = 0; s < 1000; ++s) solver.step(g, 0.9 * solver.stability_limit());
    CHECK(std::abs(g.mass() - 1.0) <= 1e-9);
    CHECK(g.clip_events == 0);
  }
}

TEST_CASE("dt beyond the stability limit is rejected") {
  const FokkerPlanck1D solver(-8, 8, 400, quadratic_potential(), 1.0);
  DensityGrid g = gaussian_density(-8, 8, 400, 0, 1);
  try {
    solver.step(g, 1.01 * solver.stability_limit());
    FAIL("expected StabilityError");
  } catch (const StabilityError& e) {
    CHECK(e.limit() == solver.stability_limit());
  }
  const double dx = 16.0 / 400;
  CHECK(solver.stability_limit() <= dx * dx / (2.0 + dx * 7.98));
  CHECK_THROWS_AS(fp_step(uniform_density(-8, 8, 10), quadratic_potential(), 1.0, 1e9), StabilityError);
}

TEST_CASE("zero temperature transport moves mass downhill") {
  const Potential q = quadratic_potential();
  const FokkerPlanck1D solver(-4, 4, 160, q, 0.0);
  DensityGrid g = gaussian_density(-4, 4, 160, 2.0, 0.3);
  const double e0 = free_energy(g, q, 0.0);
  for (int s = 0; s < 200; ++s) solver.step(g, solver.stability_limit());
  CHECK(free_energy(g, q, 0.0) < e0);
  CHECK(std::abs(g.mass() - 1.0) <= 1e-12);
}

TEST_CASE("free energy closed forms") {
  const Potential q = quadratic_potential();
  const DensityGrid g = gibbs_density(-8, 8, 400, q, 1.0);
  CHECK(std::abs(free_energy(g, q, 1.0) - (-0.91894)) <= 1e-3);

  const DensityGrid h = gaussian_density(-8, 8, 400, 1.0, 0.7);
  double energy = 0.0;
  for (Eigen::Index i = 0; i < h.cells(); ++i) energy += q.value_at(h.center(i)) * h.rho(i) * h.dx();
  CHECK(free_energy(h, q, 0.0) == doctest::Approx(energy).epsilon(1e-14));

  DensityGrid point = uniform_density(-1, 1, 8);
  point.rho.setZero();
  point.rho(5) = 1.0 / point.dx();
  const double beta = 0.6;
  CHECK(free_energy(point, q, beta) ==
        doctest::Approx(q.value_at(point.center(5)) + beta * std::log(1.0 / point.dx())).epsilon(1e-14));
}

TEST_CASE("free energy never increases along a run") {
  for (const Potential& pot : {quadratic_potential(), double_well_potential()}) {
    CAPTURE(pot.name);
    const FokkerPlanck1D solver(-4, 4, 200, pot, 0.5);
    const double dt = 0.9 * solver.stability_limit();
    const auto run = run_fokker_planck(bimodal_density(-4, 4, 200, -1.5, 2.0, 0.3), pot, 0.5, dt, 2000, 1);
    const auto rep = dissipation_check(run.snapshots, pot, 0.5, dt);
    CHECK(rep.passed);
    CHECK(rep.max_uphill <= 0.0);
    CHECK(run.records.size() == 2001);
  }
  const Potential q = quadratic_potential();
  const auto at_rest = run_fokker_planck(gibbs_density(-8, 8, 400, q, 1.0), q, 1.0, 1e-4, 50, 10);
  for (const auto& r : at_rest.records) CHECK(r.free_energy == doctest::Approx(at_rest.records[0].free_energy));
  CHECK(dissipation_check(at_rest.snapshots, q, 1.0, 1e-4).passed);
}

TEST_CASE("entropy production terms") {
  const Potential q = quadratic_potential();
  const auto ep = entropy_production_terms(gibbs_density(-8, 8, 400, q, 1.0), q, 1.0);
  CHECK(ep.drift == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(ep.diffusion == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(ep.total()) <= 1e-2);

  CHECK(entropy_production_terms(gaussian_density(-8, 8, 400, 0.5, 1.0), q, 0.0).diffusion == 0.0);
}

TEST_CASE("entropy production matches the entropy rate under refinement") {
  // Residual |dS/dt - (drift + diffusion)| shrinks as dx and dt shrink together.
  const Potential q = quadratic_potential();
  const double beta = 1.0;
  double previous = 1e300;
  for (int m : {100, 200, 400}) {
    const FokkerPlanck1D solver(-6, 6, m, q, beta);
    const double dt = 0.5 * solver.stability_limit();
    DensityGrid g = gaussian_density(-6, 6, m, 1.0, 0.6);
    for (int s = 0; static_cast<double>(s) * dt < 0.2; ++s) solver.step(g, dt);
    const double s0 = shannon_entropy(g);
    const auto ep = entropy_production_terms(g, q, beta);
    DensityGrid next = g;
    solver.step(next, dt);
    const double residual = std::abs((shannon_entropy(next) - s0) / dt - ep.total());
    MESSAGE("m = " << m << ": residual " << residual);
    CHECK(previous / residual > 3.0);
    previous = residual;
  }
  CHECK(previous < 2e-2);
}

TEST_CASE("clipping warns through the sink") {
  std::vector<std::string> seen;
  const auto old = set_warning_sink([&](const std::string& m) { seen.push_back(m); });
  const Potential steep = quadratic_potential(1, 50.0);
  const FokkerPlanck1D solver(-1, 1, 40, steep, 0.0);
  DensityGrid g = uniform_density(-1, 1, 40);
  g.rho.setZero();
  g.rho(0) = 1.0 / g.dx();
  solver.step(g, solver.stability_limit());
  set_warning_sink(old);
  CHECK(g.clip_events == seen.size());
  CHECK(g.rho.minCoeff() >= 0.0);
}

TEST_CASE("csv exports") {
  const Potential q = quadratic_potential();
  const auto run = run_fokker_planck(gaussian_density(-4, 4, 20, 0, 1), q, 1.0, 1e-3, 5, 5);
  std::stringstream rec, snap;
  write_density_records_csv(rec, run.records);
  write_density_snapshot_csv(snap, run.snapshots.back());
  const CsvTable a = read_csv(rec);
  const CsvTable b = read_csv(snap);
  CHECK(a.header == std::vector<std::string>{"t", "free_energy", "entropy", "drift_term", "diffusion_term", "mass"});
  CHECK(a.rows.size() == 2);
  CHECK(b.header == std::vector<std::string>{"theta", "rho"});
  CHECK(b.rows.size() == 20);
  CHECK(a.number(1, "mass") == doctest::Approx(1.0));
}
