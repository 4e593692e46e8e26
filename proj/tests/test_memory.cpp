#include <doctest.h>

#include <cmath>
#include <sstream>

#include "erlab/memory.hpp"
#include "generators.hpp"

using namespace erlab;

namespace {

Vector pm(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::vector<Vector> constant_traj(const Vector& z, int len) { return std::vector<Vector>(len, z); }

}  // namespace

TEST_CASE("hebbian store") {
  const Matrix patterns = random_patterns(1, 50, 3);
  const HopfieldModel m = hebbian_store(patterns);
  const Vector xi = m.pattern(0);
  CHECK((m.W * xi).isApprox((49.0 / 50.0) * xi, 1e-14));
  CHECK(m.W == m.W.transpose());
  CHECK(m.W.diagonal().isZero(0.0));
  CHECK_NOTHROW(m.validate());

  CounterRng rng(61);
  for (int c = 0; c < 20; ++c) {
    const HopfieldModel r = hebbian_store(random_patterns(testgen::uniform_int(rng, 1, 8), 30, rng.next_u64()));
    CHECK(r.W == r.W.transpose());
  }
  CHECK_THROWS_AS(hebbian_store(Matrix::Constant(1, 3, 0.5)), ValidationError);
}

TEST_CASE("orthogonal patterns are fixed points") {
  Matrix patterns(2, 4);
  patterns << 1, 1, 1, 1, 1, -1, 1, -1;
  const HopfieldModel m = hebbian_store(patterns);
  for (int mu = 0; mu < 2; ++mu) CHECK(sign_of(m.W * m.pattern(mu)) == m.pattern(mu));
  const auto traj = run_dynamics(m, m.pattern(1), 5);
  for (const auto& z : traj) CHECK(z == m.pattern(1));
}

TEST_CASE("overlap examples") {
  const Vector xi = pm({1, -1, 1, -1});
  CHECK(overlap(xi, xi) == 1.0);
  CHECK(overlap(-xi, xi) == -1.0);
  CHECK(overlap(pm({1, 1, -1, -1}), xi) == 0.0);
  CHECK_THROWS_AS(overlap(pm({1, 1}), xi), DimensionError);
  CHECK(sign_of(pm({0, -2, 3})) == pm({1, -1, 1}));
}

TEST_CASE("flip_bits flips the requested count") {
  const Vector xi = random_patterns(1, 200, 4).row(0).transpose();
  const Vector z = flip_bits(xi, 0.1, 9);
  CHECK((z.array() != xi.array()).count() == 20);
  CHECK(overlap(z, xi) == doctest::Approx(0.8));
  CHECK(flip_bits(xi, 0.1, 9) == z);
  CHECK(flip_bits(xi, 0.0, 9) == xi);
  CHECK_THROWS_AS(flip_bits(xi, 1.5, 9), ValidationError);
}

TEST_CASE("fixed point trajectory is constant after the first step") {
  const HopfieldModel m = hebbian_store(random_patterns(3, 100, 5));
  std::vector<Vector> traj = run_dynamics(m, flip_bits(m.pattern(0), 0.05, 1), 10);
  Vector star = traj.back();
  REQUIRE(sign_of(m.W * star) == star);
  const auto again = run_dynamics(m, star, 6);
  for (std::size_t t = 1; t < again.size(); ++t) CHECK(again[t] == star);
}

TEST_CASE("single-pattern retrieval from 10% corruption") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const HopfieldModel m = hebbian_store(random_patterns(1, 200, seed));
    const auto traj = run_dynamics(m, flip_bits(m.pattern(0), 0.1, seed + 100), 5);
    const auto rec = transient_recovery(traj, m.pattern(0), 5, 0.99);
    CHECK(rec.m_max >= 0.99);
  }
}

TEST_CASE("sequential updates never raise the energy") {
  CounterRng rng(62);
  for (int c = 0; c < 20; ++c) {
    const int n = testgen::uniform_int(rng, 20, 80);
    const HopfieldModel m = hebbian_store(random_patterns(testgen::uniform_int(rng, 1, 20), n, rng.next_u64()));
    Vector z0(n);
    for (int i = 0; i < n; ++i) z0(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const auto traj = run_dynamics(m, z0, 8, {DynamicsMode::SeqSign, 1.0, 0.1});
    for (std::size_t t = 0; t + 1 < traj.size(); ++t)
      CHECK(hopfield_energy(m, traj[t + 1]) <= hopfield_energy(m, traj[t]) + 1e-12);
  }
}

TEST_CASE("tanh dynamics with zero gain decays geometrically") {
  const HopfieldModel m = hebbian_store(random_patterns(2, 30, 6));
  const Vector z0 = m.pattern(0);
  const auto traj = run_dynamics(m, z0, 20, {DynamicsMode::TanhOde, 0.0, 0.1});
  for (int t = 0; t <= 20; ++t) CHECK(traj[t].isApprox(std::pow(0.9, t) * z0, 1e-12));
  CHECK(parse_dynamics_mode(to_string(DynamicsMode::TanhOde)) == DynamicsMode::TanhOde);
}

TEST_CASE("transient recovery") {
  const Vector xi = pm({1, 1, -1, 1});
  const std::vector<Vector> traj{pm({1, -1, -1, -1}), pm({1, 1, -1, -1}), xi, xi};
  const auto r = transient_recovery(traj, xi, 3, 0.8);
  CHECK(r.m_max == 1.0);
  CHECK(r.t_argmax == 2);
  CHECK(r.m_final == 1.0);
  CHECK(r.recoverable);
  CHECK_FALSE(transient_recovery(traj, xi, 3, 1.01).recoverable);
  CHECK_THROWS_AS(transient_recovery(traj, xi, 4, 0.8), ValidationError);
}

TEST_CASE("memory effectiveness") {
  const Vector xi = pm({1, -1, 1, -1});
  CHECK(memory_effectiveness(constant_traj(xi, 11), xi, 10, 0.8) == 1.0);
  std::vector<Vector> half;
  for (int t = 0; t < 10; ++t) half.push_back(t % 2 ? xi : Vector(-xi));
  half.push_back(xi);
  CHECK(memory_effectiveness(half, xi, 10, 0.8) == 0.5);

  CounterRng rng(63);
  for (int c = 0; c < 30; ++c) {
    const int n = 16, T = testgen::uniform_int(rng, 1, 15);
    const Vector target = random_patterns(1, n, rng.next_u64()).row(0).transpose();
    std::vector<Vector> traj;
    for (int t = 0; t <= T; ++t) traj.push_back(flip_bits(target, testgen::uniform_real(rng, 0.0, 0.5), rng.next_u64()));
    const double tau = testgen::uniform_real(rng, 0.0, 1.0);
    int hits = 0;
    for (int t = 0; t < T; ++t) hits += traj[t].dot(target) / n >= tau ? 1 : 0;
    CHECK(memory_effectiveness(traj, target, T, tau) == doctest::Approx(static_cast<double>(hits) / T));
  }
}

TEST_CASE("memory force") {
  const Vector xi100 = random_patterns(1, 100, 7).row(0).transpose();
  CounterRng rng(64);
  std::vector<Vector> traj;
  for (int t = 0; t < 6; ++t) traj.push_back(testgen::normal_vector(rng, 100));
  CHECK(memory_force(traj, xi100, 5) == doctest::Approx(0.1));
  CHECK(memory_force(traj, 5, linear_overlap(xi100)) == doctest::Approx(0.1));
  const Vector one = pm({-1});
  CHECK(memory_force(constant_traj(one, 3), one, 2) == doctest::Approx(1.0));

  const Vector xi = random_patterns(1, 12, 8).row(0).transpose();
  std::vector<Vector> states;
  for (int t = 0; t < 4; ++t) states.push_back(testgen::normal_vector(rng, 12, 0.2));
  double fd_sum = 0.0;
  for (int t = 0; t < 3; ++t) {
    const auto m = [&](const Vector& z) { return std::tanh(z.dot(xi)) / 12.0; };
    fd_sum += finite_diff_grad(m, states[t], 1e-6).norm();
  }
  CHECK(memory_force(states, 3, tanh_overlap(xi)) == doctest::Approx(fd_sum / 3.0).epsilon(1e-8));
}

TEST_CASE("memory sweep") {
  MemorySweepConfig cfg;
  cfg.N = 100;
  cfg.load_ratios = {0.05, 0.3};
  cfg.seeds = 6;
  const auto rows = memory_sweep(cfg, 2);
  REQUIRE(rows.size() == 12);
  CHECK(rows[0].load_ratio == 0.05);
  CHECK(rows[11].load_ratio == 0.3);
  for (int i = 0; i < 6; ++i) CHECK(rows[i].recoverable);
  std::stringstream a, b;
  write_memory_csv(a, rows);
  write_memory_csv(b, memory_sweep(cfg, 1));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("load_ratio,seed,m_max,t_argmax,m_final,E_mem,recoverable\n", 0) == 0);
  const auto back = read_memory_csv(a);
  REQUIRE(back.size() == 12);
  CHECK(back[7].m_final == rows[7].m_final);
  CHECK(back[7].recoverable == rows[7].recoverable);

  int transient = 0;
  for (int i = 6; i < 12; ++i) transient += rows[i].m_max >= 0.8 && rows[i].m_final < 0.3;
  MESSAGE("overloaded transient retrievals: " << transient << " / 6");

  cfg.seeds = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
