#include "erlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace erlab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

Philox::Block Philox::generate(std::uint64_t key, std::uint64_t counter_hi, std::uint64_t counter_lo) {
  auto c0 = static_cast<std::uint32_t>(counter_lo);
  auto c1 = static_cast<std::uint32_t>(counter_lo >> 32);
  auto c2 = static_cast<std::uint32_t>(counter_hi);
  auto c3 = static_cast<std::uint32_t>(counter_hi >> 32);
  auto k0 = static_cast<std::uint32_t>(key);
  auto k1 = static_cast<std::uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
    c0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
    c2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
    c1 = static_cast<std::uint32_t>(p1);
    c3 = static_cast<std::uint32_t>(p0);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return {c0, c1, c2, c3};
}

std::uint64_t CounterRng::next_u64() {
  if (have_word_) {
    have_word_ = false;
    return spare_word_;
  }
  const auto b = Philox::generate(key_, stream_, block_++);
  spare_word_ = (static_cast<std::uint64_t>(b[3]) << 32) | b[2];
  have_word_ = true;
  return (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
}

double CounterRng::uniform() { return bits_to_unit(next_u64()); }

double CounterRng::normal() {
  if (have_normal_) {
    have_normal_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(phi);
  have_normal_ = true;
  return r * std::cos(phi);
}

std::array<double, 2> normal_pair(std::uint64_t key, std::uint64_t counter_hi, std::uint64_t counter_lo) {
  // Marsaglia polar method. A rejected attempt moves to a derived key at the
  // same counter, so the pair stays a pure function of (key, counter).
  for (std::uint64_t attempt = 0;; ++attempt) {
    const auto b = Philox::generate(key + attempt * 0x9E3779B97F4A7C15ull, counter_hi, counter_lo);
    const double v1 = 2.0 * bits_to_unit((static_cast<std::uint64_t>(b[1]) << 32) | b[0]) - 1.0;
    const double v2 = 2.0 * bits_to_unit((static_cast<std::uint64_t>(b[3]) << 32) | b[2]) - 1.0;
    const double s = v1 * v1 + v2 * v2;
    if (s >= 1.0 || s == 0.0) continue;
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    return {v1 * f, v2 * f};
  }
}

std::uint64_t hash_seed(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6A09E667F3BCC909ull;
  for (auto w : words) h = splitmix(h ^ splitmix(w));
  return h;
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, std::uint64_t seed,
                                std::uint64_t stream) {
  CounterRng rng(seed, stream);
  Eigen::MatrixXd m(rows, cols);
  // Row-major fill order so that layouts match flat parameter vectors.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = stddev * rng.normal();
  return m;
}

}  // namespace erlab
