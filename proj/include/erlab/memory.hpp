#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "erlab/autodiff.hpp"
#include "erlab/linalg.hpp"

namespace erlab {

/// Hopfield network with Hebbian couplings. Patterns are stored row-wise.
struct HopfieldModel {
  int N = 0;
  Matrix patterns;  ///< P x N, entries +-1
  Matrix W;         ///< N x N, symmetric, zero diagonal

  int P() const { return static_cast<int>(patterns.rows()); }
  Vector pattern(int mu) const { return patterns.row(mu).transpose(); }
  void validate() const;
};

/// W = (1/N) sum_mu xi xi^T with the diagonal zeroed.
HopfieldModel hebbian_store(const Matrix& patterns);

/// P x N matrix of independent fair +-1 entries.
Matrix random_patterns(int P, int N, std::uint64_t seed);
/// Copy of xi with round(fraction * N) distinct entries negated.
Vector flip_bits(const Vector& xi, double fraction, std::uint64_t seed);

/// (1/N) z . xi
double overlap(const Vector& z, const Vector& xi);
/// -1/2 z^T W z
double hopfield_energy(const HopfieldModel& model, const Vector& z);
/// Elementwise sign with sign(0) = +1.
Vector sign_of(const Vector& v);

enum class DynamicsMode { SyncSign, SeqSign, TanhOde };

std::string to_string(DynamicsMode mode);
DynamicsMode parse_dynamics_mode(std::string_view text);

struct DynamicsConfig {
  DynamicsMode mode = DynamicsMode::SyncSign;
  double gain = 1.0;  ///< g in dz/dt = -z + tanh(g W z)
  double dt = 0.1;    ///< Euler step for tanh_ode
  bool operator==(const DynamicsConfig&) const = default;
};

/// States z_0..z_T. One seq_sign step is a full in-order sweep over neurons.
std::vector<Vector> run_dynamics(const HopfieldModel& model, const Vector& z0, int T, const DynamicsConfig& cfg = {});

struct TransientRecovery {
  double m_max = 0.0;
  int t_argmax = 0;
  double m_final = 0.0;
  bool recoverable = false;
};

/// Max overlap over t = 0..T (first maximiser), overlap at T, and m_max >= threshold.
TransientRecovery transient_recovery(const std::vector<Vector>& traj, const Vector& xi, int T, double threshold);

/// Fraction of t = 0..T-1 with overlap >= tau_r.
double memory_effectiveness(const std::vector<Vector>& traj, const Vector& xi, int T, double tau_r);

/// Builds m(z) on a tape from the state leaf.
using OverlapFn = std::function<ad::Var(ad::Tape&, ad::Var z)>;

/// (1/T) sum_{t<T} ||grad_z m(z_t)|| for the linear overlap. The gradient is
/// xi / N whatever the state, so this is exactly 1/sqrt(N).
double memory_force(const std::vector<Vector>& traj, const Vector& xi, int T);
/// Same average for an arbitrary differentiable overlap.
double memory_force(const std::vector<Vector>& traj, int T, const OverlapFn& m);

OverlapFn linear_overlap(const Vector& xi);
/// (1/N) tanh(z . xi)
OverlapFn tanh_overlap(const Vector& xi);

struct MemorySweepConfig {
  int N = 200;
  std::vector<double> load_ratios{0.05, 0.1, 0.138, 0.2, 0.3};
  int seeds = 50;
  std::uint64_t base_seed = 0;
  double flip_fraction = 0.1;
  int T = 20;
  double retrieval_threshold = 0.8;
  double tau_r = 0.8;
  DynamicsConfig dynamics;

  void validate() const;
  bool operator==(const MemorySweepConfig&) const = default;
};

struct MemoryRow {
  double load_ratio = 0.0;
  std::uint64_t seed = 0;
  double m_max = 0.0;
  int t_argmax = 0;
  double m_final = 0.0;
  double E_mem = 0.0;
  bool recoverable = false;
};

/// One trial: P = max(1, round(load_ratio * N)) random patterns, probe pattern 0 with flipped bits.
MemoryRow memory_trial(const MemorySweepConfig& cfg, double load_ratio, std::uint64_t seed);
/// Rows ordered by load ratio, then seed index. Trial seeds are hash(base_seed, ratio index, seed index).
std::vector<MemoryRow> memory_sweep(const MemorySweepConfig& cfg, int jobs = 1);

/// Header load_ratio,seed,m_max,t_argmax,m_final,E_mem,recoverable.
void write_memory_csv(std::ostream& os, const std::vector<MemoryRow>& rows);
std::vector<MemoryRow> read_memory_csv(std::istream& is);

}  // namespace erlab
