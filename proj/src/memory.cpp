#include "erlab/memory.hpp"

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "erlab/csv.hpp"
#include "erlab/errors.hpp"
#include "erlab/parallel.hpp"
#include "erlab/rng.hpp"

namespace erlab {
namespace {

void check_horizon(const std::vector<Vector>& traj, int T) {
  if (T < 1) throw ValidationError("memory horizon T must be >= 1");
  if (static_cast<std::size_t>(T) >= traj.size())
    throw ValidationError("horizon T = " + std::to_string(T) + " exceeds the trajectory (" +
                          std::to_string(traj.size()) + " states)");
}

}  // namespace

void HopfieldModel::validate() const {
  if (N < 1 || patterns.cols() != N || W.rows() != N || W.cols() != N)
    throw DimensionError("Hopfield model shapes are inconsistent");
  if (patterns.rows() < 1) throw ValidationError("Hopfield model needs at least one pattern");
  if (!(patterns.array().abs() == 1.0).all()) throw ValidationError("patterns must have entries in {-1, +1}");
  if (!W.isApprox(W.transpose(), 0.0) || W.diagonal().cwiseAbs().maxCoeff() != 0.0)
    throw ValidationError("W must be symmetric with zero diagonal");
}

HopfieldModel hebbian_store(const Matrix& patterns) {
  if (patterns.rows() < 1 || patterns.cols() < 1) throw ValidationError("hebbian_store needs P >= 1 and N >= 1");
  if (!(patterns.array().abs() == 1.0).all()) throw ValidationError("patterns must have entries in {-1, +1}");
  HopfieldModel model;
  model.N = static_cast<int>(patterns.cols());
  model.patterns = patterns;
  model.W = patterns.transpose() * patterns / static_cast<double>(model.N);
  model.W.diagonal().setZero();
  return model;
}

Matrix random_patterns(int P, int N, std::uint64_t seed) {
  if (P < 1 || N < 1) throw ValidationError("random_patterns needs P >= 1 and N >= 1");
  CounterRng rng(seed, 0x40F1);
  Matrix out(P, N);
  for (int mu = 0; mu < P; ++mu)
    for (int i = 0; i < N; ++i) out(mu, i) = (rng.next_u64() >> 63) ? 1.0 : -1.0;
  return out;
}

Vector flip_bits(const Vector& xi, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ValidationError("flip fraction must be in [0, 1]");
  const auto n = static_cast<std::size_t>(xi.size());
  const auto flips = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  CounterRng rng(seed, 0xF11B);
  Vector out = xi;
  for (std::size_t k = 0; k < flips; ++k) {
    const auto j = k + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n - k));
    std::swap(order[k], order[std::min(j, n - 1)]);
    out(order[k]) = -out(order[k]);
  }
  return out;
}

double overlap(const Vector& z, const Vector& xi) {
  if (z.size() != xi.size() || z.size() == 0)
    throw DimensionError("overlap: state has " + std::to_string(z.size()) + " entries, pattern has " +
                         std::to_string(xi.size()));
  return z.dot(xi) / static_cast<double>(z.size());
}

double hopfield_energy(const HopfieldModel& model, const Vector& z) { return -0.5 * z.dot(model.W * z); }

Vector sign_of(const Vector& v) { return (v.array() >= 0.0).select(Vector::Ones(v.size()), -Vector::Ones(v.size())); }

std::string to_string(DynamicsMode mode) {
  switch (mode) {
    case DynamicsMode::SyncSign: return "sync_sign";
    case DynamicsMode::SeqSign: return "seq_sign";
    case DynamicsMode::TanhOde: return "tanh_ode";
  }
  return "?";
}

DynamicsMode parse_dynamics_mode(std::string_view text) {
  if (text == "sync_sign") return DynamicsMode::SyncSign;
  if (text == "seq_sign") return DynamicsMode::SeqSign;
  if (text == "tanh_ode") return DynamicsMode::TanhOde;
  throw ValidationError("unknown dynamics mode '" + std::string(text) + "' (sync_sign, seq_sign, tanh_ode)");
}

std::vector<Vector> run_dynamics(const HopfieldModel& model, const Vector& z0, int T, const DynamicsConfig& cfg) {
  if (T < 1) throw ValidationError("dynamics horizon T must be >= 1");
  if (z0.size() != model.N) throw DimensionError("initial state length differs from N");
  if (cfg.mode == DynamicsMode::TanhOde && !(cfg.dt > 0.0)) throw ValidationError("tanh_ode dt must be > 0");
  std::vector<Vector> traj;
  traj.reserve(T + 1);
  traj.push_back(z0);
  Vector z = z0;
  for (int t = 0; t < T; ++t) {
    switch (cfg.mode) {
      case DynamicsMode::SyncSign:
        z = sign_of(model.W * z);
        break;
      case DynamicsMode::SeqSign:
        for (int i = 0; i < model.N; ++i) z(i) = model.W.row(i).dot(z) >= 0.0 ? 1.0 : -1.0;
        break;
      case DynamicsMode::TanhOde:
        z += cfg.dt * (-z + (cfg.gain * (model.W * z)).array().tanh().matrix());
        break;
    }
    traj.push_back(z);
  }
  return traj;
}

TransientRecovery transient_recovery(const std::vector<Vector>& traj, const Vector& xi, int T, double threshold) {
  check_horizon(traj, T);
  TransientRecovery out;
  out.m_max = overlap(traj[0], xi);
  for (int t = 1; t <= T; ++t) {
    const double m = overlap(traj[t], xi);
    if (m > out.m_max) {
      out.m_max = m;
      out.t_argmax = t;
    }
  }
  out.m_final = overlap(traj[T], xi);
  out.recoverable = out.m_max >= threshold;
  return out;
}

double memory_effectiveness(const std::vector<Vector>& traj, const Vector& xi, int T, double tau_r) {
  check_horizon(traj, T);
  int hits = 0;
  for (int t = 0; t < T; ++t)
    if (overlap(traj[t], xi) >= tau_r) ++hits;
  return static_cast<double>(hits) / T;
}

double memory_force(const std::vector<Vector>& traj, const Vector& xi, int T) {
  check_horizon(traj, T);
  if (xi.size() != traj[0].size()) throw DimensionError("pattern length differs from the state");
  return 1.0 / std::sqrt(static_cast<double>(xi.size()));
}

double memory_force(const std::vector<Vector>& traj, int T, const OverlapFn& m) {
  check_horizon(traj, T);
  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    ad::Tape tape;
    const ad::Var z = tape.variable(traj[t]);
    tape.backward(m(tape, z));
    total += z.grad().norm();
  }
  return total / T;
}

OverlapFn linear_overlap(const Vector& xi) {
  return [xi](ad::Tape& tape, ad::Var z) {
    return ad::scale(ad::dot(z, tape.constant(xi)), 1.0 / static_cast<double>(xi.size()));
  };
}

OverlapFn tanh_overlap(const Vector& xi) {
  return [xi](ad::Tape& tape, ad::Var z) {
    return ad::scale(ad::tanh(ad::dot(z, tape.constant(xi))), 1.0 / static_cast<double>(xi.size()));
  };
}

void MemorySweepConfig::validate() const {
  if (N < 1) throw ValidationError("memory N must be >= 1");
  if (load_ratios.empty()) throw ValidationError("memory load_ratios must be non-empty");
  for (double r : load_ratios)
    if (!(r > 0.0)) throw ValidationError("memory load_ratios must be > 0");
  if (seeds < 1) throw ValidationError("memory seeds must be >= 1");
  if (!(flip_fraction >= 0.0 && flip_fraction <= 1.0)) throw ValidationError("memory flip_fraction must be in [0, 1]");
  if (T < 1) throw ValidationError("memory T must be >= 1");
  if (dynamics.mode == DynamicsMode::TanhOde && !(dynamics.dt > 0.0))
    throw ValidationError("memory dynamics.dt must be > 0");
}

MemoryRow memory_trial(const MemorySweepConfig& cfg, double load_ratio, std::uint64_t seed) {
  const int P = std::max(1, static_cast<int>(std::lround(load_ratio * cfg.N)));
  const HopfieldModel model = hebbian_store(random_patterns(P, cfg.N, hash_seed({seed, 1})));
  const Vector xi = model.pattern(0);
  const auto traj = run_dynamics(model, flip_bits(xi, cfg.flip_fraction, hash_seed({seed, 2})), cfg.T, cfg.dynamics);
  const TransientRecovery rec = transient_recovery(traj, xi, cfg.T, cfg.retrieval_threshold);
  return {load_ratio, seed, rec.m_max, rec.t_argmax, rec.m_final, memory_effectiveness(traj, xi, cfg.T, cfg.tau_r),
          rec.recoverable};
}

std::vector<MemoryRow> memory_sweep(const MemorySweepConfig& cfg, int jobs) {
  cfg.validate();
  const std::size_t per_ratio = static_cast<std::size_t>(cfg.seeds);
  std::vector<MemoryRow> rows(cfg.load_ratios.size() * per_ratio);
  parallel_for(rows.size(), jobs, [&](std::size_t k) {
    const std::size_t ri = k / per_ratio;
    const std::size_t si = k % per_ratio;
    rows[k] = memory_trial(cfg, cfg.load_ratios[ri], hash_seed({cfg.base_seed, ri, si}));
  });
  return rows;
}

void write_memory_csv(std::ostream& os, const std::vector<MemoryRow>& rows) {
  os << "load_ratio,seed,m_max,t_argmax,m_final,E_mem,recoverable\n";
  for (const auto& r : rows) {
    os << format_double(r.load_ratio) << ',' << r.seed << ',' << format_double(r.m_max) << ',' << r.t_argmax << ','
       << format_double(r.m_final) << ',' << format_double(r.E_mem) << ',' << (r.recoverable ? "true" : "false")
       << '\n';
  }
}

std::vector<MemoryRow> read_memory_csv(std::istream& is) {
  const CsvTable table = read_csv(is);
  std::vector<MemoryRow> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    MemoryRow r;
    r.load_ratio = table.number(i, "load_ratio");
    r.seed = std::stoull(table.rows[i][table.column("seed")]);
    r.m_max = table.number(i, "m_max");
    r.t_argmax = static_cast<int>(table.number(i, "t_argmax"));
    r.m_final = table.number(i, "m_final");
    r.E_mem = table.number(i, "E_mem");
    const std::string& flag = table.rows[i][table.column("recoverable")];
    if (flag != "true" && flag != "false") throw ValidationError("recoverable must be true or false, got '" + flag + "'");
    r.recoverable = flag == "true";
    rows.push_back(r);
  }
  return rows;
}

}  // namespace erlab
