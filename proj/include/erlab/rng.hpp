#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

#include <Eigen/Core>

namespace erlab {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// Every draw is a pure function of (key, counter), so any stream position can
/// be reached in O(1) and results are identical on every platform. Gaussian
/// variates are computed from the raw bits instead of std::normal_distribution,
/// whose algorithm is implementation-defined.
class Philox {
 public:
  using Block = std::array<std::uint32_t, 4>;

  static Block generate(std::uint64_t key, std::uint64_t counter_hi, std::uint64_t counter_lo);
};

/// Sequential stream over Philox blocks: key = seed, counter = (stream, position).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : key_(seed), stream_(stream) {}

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();

  /// Jump to an absolute block position (each block yields two 64-bit words).
  void seek(std::uint64_t block) {
    block_ = block;
    have_word_ = false;
    have_normal_ = false;
  }

 private:
  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::uint64_t spare_word_ = 0;
  bool have_word_ = false;
  double spare_normal_ = 0.0;
  bool have_normal_ = false;
};

/// Maps the top 52 bits to a double in (0, 1); the extremes are 2^-53 and 1 - 2^-53.
inline double bits_to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Two independent standard normals (polar method) determined by (key, counter).
std::array<double, 2> normal_pair(std::uint64_t key, std::uint64_t counter_hi, std::uint64_t counter_lo);

/// SplitMix64 finalizer over a list of words; used to derive child seeds.
std::uint64_t hash_seed(std::initializer_list<std::uint64_t> words);

/// rows x cols matrix of i.i.d. N(0, stddev^2) draws.
Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, std::uint64_t seed,
                                std::uint64_t stream = 0);

}  // namespace erlab
