#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "erlab/autodiff.hpp"
#include "erlab/tasks.hpp"

namespace erlab {

enum class EncoderKind { Mlp, Attn1 };
enum class Activation { Tanh, Relu };

std::string to_string(EncoderKind kind);
std::string to_string(Activation act);
EncoderKind parse_encoder_kind(std::string_view text);
Activation parse_activation(std::string_view text);

/// Encoder h_theta followed by a linear prediction head.
///
/// mlp:   input -> hidden_dims... -> rep_dim, each layer affine + activation;
///        Z is the post-activation output of the rep_dim layer.
/// attn1: each input row is read as seq_len tokens of width input_dim/seq_len;
///        single-head self-attention (Q, K, V projections to rep_dim) is mean
///        pooled over tokens and passed through the activation to give Z.
///        hidden_dims is ignored.
struct EncoderSpec {
  EncoderKind kind = EncoderKind::Mlp;
  int input_dim = 8;
  std::vector<int> hidden_dims = {16};
  int rep_dim = 4;
  int output_dim = 1;
  Activation activation = Activation::Tanh;
  int seq_len = 2;

  void validate() const;
  Eigen::Index param_count() const;
  bool operator==(const EncoderSpec&) const = default;
};

/// Flat parameter vector; weight blocks are stored row-major (fan_in x fan_out).
using ParamVector = Vector;

/// Weights i.i.d. N(0, 1/fan_in), biases zero.
ParamVector init_params(const EncoderSpec& spec, std::uint64_t seed);

struct ForwardResult {
  ad::Var z;
  ad::Var yhat;
};

ForwardResult forward(ad::Var theta, ad::Var x, const EncoderSpec& spec);

struct ForwardValues {
  Matrix z;
  Matrix yhat;
};

ForwardValues forward(const ParamVector& theta, const Matrix& x, const EncoderSpec& spec);

/// Mean squared error (regression) or mean softmax cross-entropy (classification).
ad::Var pred_loss(ad::Var yhat, ad::Var y, TaskKind kind);
double pred_loss(const ParamVector& theta, const Dataset& data, const EncoderSpec& spec, TaskKind kind);

/// Test minus train predictive loss.
double gen_gap(const ParamVector& theta, const Dataset& train, const Dataset& test, const EncoderSpec& spec,
               TaskKind kind);

}  // namespace erlab
