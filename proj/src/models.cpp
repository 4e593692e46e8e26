#include "erlab/models.hpp"

#include <cmath>

#include "erlab/errors.hpp"
#include "erlab/rng.hpp"

namespace erlab {

namespace {

struct Layer {
  Eigen::Index fan_in;
  Eigen::Index fan_out;
  bool has_bias;
};

// Parameter layout shared by init_params and forward.
std::vector<Layer> layout(const EncoderSpec& spec) {
  std::vector<Layer> layers;
  if (spec.kind == EncoderKind::Mlp) {
    Eigen::Index prev = spec.input_dim;
    for (int h : spec.hidden_dims) {
      layers.push_back({prev, h, true});
      prev = h;
    }
    layers.push_back({prev, spec.rep_dim, true});
  } else {
    const Eigen::Index token = spec.input_dim / spec.seq_len;
    for (int i = 0; i < 3; ++i) layers.push_back({token, spec.rep_dim, false});
  }
  layers.push_back({spec.rep_dim, spec.output_dim, true});
  return layers;
}

ad::Var activate(ad::Var a, Activation act) { return act == Activation::Tanh ? ad::tanh(a) : ad::relu(a); }

}  // namespace

std::string to_string(EncoderKind kind) { return kind == EncoderKind::Mlp ? "mlp" : "attn1"; }
std::string to_string(Activation act) { return act == Activation::Tanh ? "tanh" : "relu"; }

EncoderKind parse_encoder_kind(std::string_view text) {
  if (text == "mlp") return EncoderKind::Mlp;
  if (text == "attn1") return EncoderKind::Attn1;
  throw ValidationError("unknown encoder kind '" + std::string(text) + "' (expected mlp|attn1)");
}

Activation parse_activation(std::string_view text) {
  if (text == "tanh") return Activation::Tanh;
  if (text == "relu") return Activation::Relu;
  throw ValidationError("unknown activation '" + std::string(text) + "' (expected tanh|relu)");
}

void EncoderSpec::validate() const {
  if (input_dim < 1 || rep_dim < 1 || output_dim < 1) throw ValidationError("encoder dims must all be >= 1");
  for (int h : hidden_dims)
    if (h < 1) throw ValidationError("encoder.hidden_dims entries must be >= 1");
  if (kind == EncoderKind::Attn1 && (seq_len < 1 || input_dim % seq_len != 0))
    throw ValidationError("encoder.seq_len must divide encoder.input_dim for attn1");
}

Eigen::Index EncoderSpec::param_count() const {
  Eigen::Index n = 0;
  for (const auto& l : layout(*this)) n += (l.fan_in + (l.has_bias ? 1 : 0)) * l.fan_out;
  return n;
}

ParamVector init_params(const EncoderSpec& spec, std::uint64_t seed) {
  spec.validate();
  CounterRng rng(seed, 0x1A17);
  ParamVector theta(spec.param_count());
  Eigen::Index k = 0;
  for (const auto& l : layout(spec)) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(l.fan_in));
    for (Eigen::Index i = 0; i < l.fan_in * l.fan_out; ++i) theta(k++) = sd * rng.normal();
    if (l.has_bias)
      for (Eigen::Index i = 0; i < l.fan_out; ++i) theta(k++) = 0.0;
  }
  return theta;
}

ForwardResult forward(ad::Var theta, ad::Var x, const EncoderSpec& spec) {
  spec.validate();
  if (theta.value().size() != spec.param_count())
    throw DimensionError("parameter vector has " + std::to_string(theta.value().size()) + " entries, encoder needs " +
                         std::to_string(spec.param_count()));
  if (x.cols() != spec.input_dim)
    throw DimensionError("input has " + std::to_string(x.cols()) + " columns, encoder expects " +
                         std::to_string(spec.input_dim));

  const auto layers = layout(spec);
  Eigen::Index offset = 0;
  auto weight = [&](const Layer& l) {
    auto w = ad::param_block(theta, offset, l.fan_in, l.fan_out);
    offset += l.fan_in * l.fan_out;
    return w;
  };
  auto bias = [&](const Layer& l) {
    auto b = ad::param_block(theta, offset, 1, l.fan_out);
    offset += l.fan_out;
    return b;
  };

  ad::Var z;
  if (spec.kind == EncoderKind::Mlp) {
    ad::Var h = x;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
      auto w = weight(layers[i]);
      auto b = bias(layers[i]);
      h = activate(ad::add_row(ad::matmul(h, w), b), spec.activation);
    }
    z = h;
  } else {
    const Eigen::Index token = spec.input_dim / spec.seq_len;
    auto tokens = ad::reshape_rows(x, x.rows() * spec.seq_len, token);
    auto wq = weight(layers[0]);
    auto wk = weight(layers[1]);
    auto wv = weight(layers[2]);
    auto att = ad::segment_attention(ad::matmul(tokens, wq), ad::matmul(tokens, wk), ad::matmul(tokens, wv),
                                     spec.seq_len);
    z = activate(ad::segment_mean(att, spec.seq_len), spec.activation);
  }
  const auto& head = layers.back();
  auto wo = weight(head);
  auto bo = bias(head);
  return {z, ad::add_row(ad::matmul(z, wo), bo)};
}

ForwardValues forward(const ParamVector& theta, const Matrix& x, const EncoderSpec& spec) {
  ad::Tape tape;
  auto out = forward(tape.constant(theta), tape.constant(x), spec);
  return {out.z.value(), out.yhat.value()};
}

ad::Var pred_loss(ad::Var yhat, ad::Var y, TaskKind kind) {
  return kind == TaskKind::RegressionLowRank ? ad::mse(yhat, y) : ad::softmax_cross_entropy(yhat, y);
}

double pred_loss(const ParamVector& theta, const Dataset& data, const EncoderSpec& spec, TaskKind kind) {
  if (data.size() == 0) throw ValidationError("pred_loss on an empty dataset");
  ad::Tape tape;
  auto out = forward(tape.constant(theta), tape.constant(data.x), spec);
  return pred_loss(out.yhat, tape.constant(data.y), kind).scalar();
}

double gen_gap(const ParamVector& theta, const Dataset& train, const Dataset& test, const EncoderSpec& spec,
               TaskKind kind) {
  return pred_loss(theta, test, spec, kind) - pred_loss(theta, train, spec, kind);
}

}  // namespace erlab
