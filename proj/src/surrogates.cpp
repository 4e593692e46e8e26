#include "erlab/surrogates.hpp"

#include <cmath>
#include <numbers>

#include "erlab/rng.hpp"

namespace erlab {

std::string to_string(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::Softmax: return "softmax";
    case SurrogateKind::Variance: return "variance";
    case SurrogateKind::LogDet: return "logdet";
  }
  return "logdet";
}

SurrogateKind parse_surrogate_kind(std::string_view text) {
  if (text == "softmax") return SurrogateKind::Softmax;
  if (text == "variance") return SurrogateKind::Variance;
  if (text == "logdet") return SurrogateKind::LogDet;
  throw ValidationError("unknown surrogate kind '" + std::string(text) + "' (expected softmax|variance|logdet)");
}

void SurrogateConfig::validate() const {
  if (!(epsilon > 0.0)) throw ValidationError("surrogate.epsilon must be > 0");
  if (!(sigma_xi >= 0.0)) throw ValidationError("surrogate.sigma_xi must be >= 0");
}

Matrix noisy_rep(const Matrix& z, double sigma_xi, std::uint64_t seed) {
  if (!(sigma_xi >= 0.0)) throw ValidationError("sigma_xi must be >= 0");
  if (sigma_xi == 0.0) return z;
  return z + gaussian_matrix(z.rows(), z.cols(), sigma_xi, seed);
}

ad::Var noisy_rep(ad::Var z, double sigma_xi, std::uint64_t seed) {
  if (!(sigma_xi >= 0.0)) throw ValidationError("sigma_xi must be >= 0");
  if (sigma_xi == 0.0) return z;
  auto noise = z.tape()->constant(gaussian_matrix(z.rows(), z.cols(), sigma_xi, seed));
  return ad::add(z, noise);
}

ad::Var entropy_logdet(ad::Var z, double epsilon) {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  auto cov = ad::covariance(z);
  auto reg = ad::add(cov, z.tape()->constant(epsilon * Matrix::Identity(cov.rows(), cov.cols())));
  return ad::scale(ad::logdet_psd(reg), 0.5);
}

ad::Var entropy_variance(ad::Var z) {
  auto cov = ad::covariance(z);
  return ad::scale(ad::trace(cov), 1.0 / static_cast<double>(cov.rows()));
}

ad::Var entropy_softmax(ad::Var z) {
  if (z.cols() < 2) throw DimensionError("softmax entropy needs at least 2 representation dimensions");
  return ad::row_softmax_entropy(z);
}

ad::Var entropy_surrogate(ad::Var z, const SurrogateConfig& cfg) {
  switch (cfg.kind) {
    case SurrogateKind::Softmax: return entropy_softmax(z);
    case SurrogateKind::Variance: return entropy_variance(z);
    case SurrogateKind::LogDet: return entropy_logdet(z, cfg.epsilon);
  }
  return entropy_logdet(z, cfg.epsilon);
}

double surrogate_value(const Matrix& z, const SurrogateConfig& cfg) {
  ad::Tape tape;
  return entropy_surrogate(tape.constant(z), cfg).scalar();
}

MutualInfoEstimate mutual_info_upper(const Matrix& z_noisy, double sigma_xi) {
  if (!(sigma_xi > 0.0)) throw ValidationError("mutual information is undefined for sigma_xi = 0");
  const double p = static_cast<double>(z_noisy.cols());
  const double noise_entropy = 0.5 * p * std::log(2.0 * std::numbers::pi * std::numbers::e * sigma_xi * sigma_xi);
  const double raw = gaussian_entropy_bound(covariance(z_noisy)) - noise_entropy;
  return raw < 0.0 ? MutualInfoEstimate{0.0, true} : MutualInfoEstimate{raw, false};
}

}  // namespace erlab
