#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include "erlab/autodiff.hpp"

namespace erlab {

enum class SurrogateKind { Softmax, Variance, LogDet };

std::string to_string(SurrogateKind kind);
/// Parses "softmax" | "variance" | "logdet"; throws ValidationError otherwise.
SurrogateKind parse_surrogate_kind(std::string_view text);

struct SurrogateConfig {
  SurrogateKind kind = SurrogateKind::LogDet;
  double epsilon = 1e-4;
  double sigma_xi = 0.1;

  void validate() const;
  bool operator==(const SurrogateConfig&) const = default;
};

/// Z + xi with xi ~ N(0, sigma_xi^2) drawn from the seeded stream. The noise
/// enters the tape as a constant, so gradients flow through Z only.
ad::Var noisy_rep(ad::Var z, double sigma_xi, std::uint64_t seed);
Matrix noisy_rep(const Matrix& z, double sigma_xi, std::uint64_t seed);

/// 1/2 log det(cov(Z) + eps I).
ad::Var entropy_logdet(ad::Var z, double epsilon);
/// tr(cov(Z)) / p.
ad::Var entropy_variance(ad::Var z);
/// Batch mean of the Shannon entropy of a row-wise softmax; lies in [0, log p].
ad::Var entropy_softmax(ad::Var z);

ad::Var entropy_surrogate(ad::Var z, const SurrogateConfig& cfg);

/// Evaluates a surrogate on a plain matrix (builds a throwaway tape).
double surrogate_value(const Matrix& z, const SurrogateConfig& cfg);

/// 1/2 log det(2 pi e Sigma): the entropy of a Gaussian with covariance Sigma,
/// an upper bound on the entropy of any law with that covariance.
template <typename Derived>
typename Derived::Scalar gaussian_entropy_bound(const Eigen::MatrixBase<Derived>& sigma) {
  using Scalar = typename Derived::Scalar;
  const Scalar p = static_cast<Scalar>(sigma.rows());
  const Scalar two_pi_e = Scalar(2) * std::numbers::pi_v<Scalar> * std::numbers::e_v<Scalar>;
  return Scalar(0.5) * (log_det_psd(sigma) + p * std::log(two_pi_e));
}

struct MutualInfoEstimate {
  double value = 0.0;
  bool clipped = false;
};

/// Gaussian upper bound on I(X; Z~) = H(Z~) - H(xi), clipped below at zero.
/// Throws ValidationError when sigma_xi == 0 (the noise entropy is -inf).
MutualInfoEstimate mutual_info_upper(const Matrix& z_noisy, double sigma_xi);

}  // namespace erlab
