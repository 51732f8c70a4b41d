#include "wgsum/encoders.hpp"

#include <stdexcept>

#include "wgsum/wordgraph.hpp"

namespace wgsum {

using namespace ad;

BiLstmEncoder::BiLstmEncoder(ParameterStore& store, const std::string& name, int input_dim,
                             int hidden, int layers, Rng& rng) {
  for (int l = 0; l < layers; ++l) {
    const int in = l == 0 ? input_dim : 2 * hidden;
    const std::string prefix = name + ".l" + std::to_string(l);
    forward_.emplace_back(store, prefix + ".fwd", in, hidden, rng);
    backward_.emplace_back(store, prefix + ".bwd", in, hidden, rng);
  }
}

EncoderOutput BiLstmEncoder::encode(Tape& tape, const Var& inputs) const {
  const Eigen::Index n = inputs.rows();
  if (n == 0) throw std::invalid_argument("BiLstmEncoder: empty input sequence");
  Var layer_input = inputs;
  LstmState last_fwd;
  LstmState first_bwd;
  for (std::size_t l = 0; l < forward_.size(); ++l) {
    std::vector<Var> fwd_states(static_cast<std::size_t>(n));
    std::vector<Var> bwd_states(static_cast<std::size_t>(n));

    Var proj_f = forward_[l].project_inputs(tape, layer_input);
    LstmState s = forward_[l].zero_state(tape);
    for (Eigen::Index t = 0; t < n; ++t) {
      s = forward_[l].step_projected(tape, row(proj_f, t), s);
      fwd_states[static_cast<std::size_t>(t)] = s.hidden;
    }
    last_fwd = s;

    Var proj_b = backward_[l].project_inputs(tape, layer_input);
    s = backward_[l].zero_state(tape);
    for (Eigen::Index t = n; t-- > 0;) {
      s = backward_[l].step_projected(tape, row(proj_b, t), s);
      bwd_states[static_cast<std::size_t>(t)] = s.hidden;
    }
    first_bwd = s;

    layer_input = concat_cols({concat_rows(fwd_states), concat_rows(bwd_states)});
  }
  EncoderOutput out;
  out.states = layer_input;
  out.summary = concat_cols({last_fwd.hidden, first_bwd.hidden});
  out.summary_cell = concat_cols({last_fwd.cell, first_bwd.cell});
  return out;
}

TransformerEncoderLayer::TransformerEncoderLayer(ParameterStore& store, const std::string& name,
                                                 int dim, int ff, int heads, Rng& rng)
    : attention_norm_(store, name + ".ln_attn", dim),
      attention_(store, name + ".attn", dim, heads, rng),
      ff_norm_(store, name + ".ln_ff", dim),
      ff_(store, name + ".ff", dim, ff, rng) {}

Var TransformerEncoderLayer::operator()(Tape& tape, const Var& x) const {
  Var normed = attention_norm_(tape, x);
  Var h = add(x, attention_.attend(tape, normed, attention_.project_memory(tape, normed)));
  return add(h, ff_(tape, ff_norm_(tape, h)));
}

TransformerEncoder::TransformerEncoder(ParameterStore& store, const std::string& name, int dim,
                                       int ff, int heads, int layers, Rng& rng) {
  for (int l = 0; l < layers; ++l) {
    layers_.emplace_back(store, name + ".l" + std::to_string(l), dim, ff, heads, rng);
  }
  final_norm_ = LayerNorm(store, name + ".ln_final", dim);
}

EncoderOutput TransformerEncoder::encode(Tape& tape, const Var& inputs) const {
  if (inputs.rows() == 0) throw std::invalid_argument("TransformerEncoder: empty input sequence");
  Var x = inputs;
  for (const auto& layer : layers_) x = layer(tape, x);
  EncoderOutput out;
  out.states = final_norm_(tape, x);
  out.summary = mean_rows(out.states);
  return out;
}

GcnLayer::GcnLayer(ParameterStore& store, const std::string& name, int in, int out, Rng& rng)
    : transform_(store, name, in, out, rng) {}

Var GcnLayer::operator()(Tape& tape, const Var& node_states,
                         const Matrix& normalized_adjacency) const {
  if (normalized_adjacency.rows() != node_states.rows() ||
      normalized_adjacency.cols() != node_states.rows()) {
    throw ShapeError("gcn_layer: adjacency " + shape_string(normalized_adjacency) +
                     " incompatible with node states " + shape_string(node_states.value()));
  }
  Var aggregated = matmul(tape.constant(normalized_adjacency), node_states);
  return relu(transform_(tape, aggregated));
}

GatLayer::GatLayer(ParameterStore& store, const std::string& name, int in, int out,
                   double negative_slope, Rng& rng)
    : negative_slope_(negative_slope) {
  weight_ = &store.add(name + ".W", in, out, Init::XavierUniform, rng);
  attn_src_ = &store.add(name + ".a_src", out, 1, Init::XavierUniform, rng);
  attn_dst_ = &store.add(name + ".a_dst", out, 1, Init::XavierUniform, rng);
  bias_ = &store.add(name + ".b", 1, out, Init::Zeros, rng);
}

Var GatLayer::attention(Tape& tape, const Var& transformed, const Matrix& adjacency) const {
  const Eigen::Index n = transformed.rows();
  if (adjacency.rows() != n || adjacency.cols() != n) {
    throw ShapeError("gat_layer: adjacency " + shape_string(adjacency) +
                     " incompatible with node states " + shape_string(transformed.value()));
  }
  Var src = matmul(transformed, tape.parameter(*attn_src_));  // n x 1
  Var dst = matmul(transformed, tape.parameter(*attn_dst_));  // n x 1
  Var ones_row = tape.constant(Matrix::Ones(1, n));
  Var ones_col = tape.constant(Matrix::Ones(n, 1));
  Var scores = add(matmul(src, ones_row), matmul(ones_col, transpose(dst)));
  return masked_softmax_rows(leaky_relu(scores, negative_slope_), adjacency);
}

Var GatLayer::operator()(Tape& tape, const Var& node_states, const Matrix& adjacency) const {
  Var transformed = matmul(node_states, tape.parameter(*weight_));
  Var alpha = attention(tape, transformed, adjacency);
  return elu(add(matmul(alpha, transformed), tape.parameter(*bias_)));
}

GraphEncoder::GraphEncoder(ParameterStore& store, const std::string& name, GnnKind kind,
                           int input_dim, int hidden, int layers, double negative_slope, Rng& rng)
    : kind_(kind) {
  for (int l = 0; l < layers; ++l) {
    const int in = l == 0 ? input_dim : hidden;
    const std::string prefix = name + ".l" + std::to_string(l);
    if (kind == GnnKind::Gcn) {
      gcn_.emplace_back(store, prefix, in, hidden, rng);
    } else if (kind == GnnKind::Gat) {
      gat_.emplace_back(store, prefix, in, hidden, negative_slope, rng);
    }
  }
}

Var GraphEncoder::encode(Tape& tape, const Var& node_features, const Matrix& adjacency) const {
  Var h = node_features;
  if (kind_ == GnnKind::Gcn) {
    const Matrix normalized = normalized_adjacency(adjacency);
    for (const auto& layer : gcn_) h = layer(tape, h, normalized);
  } else if (kind_ == GnnKind::Gat) {
    for (const auto& layer : gat_) h = layer(tape, h, adjacency);
  }
  return h;
}

DualGraphEncoder::DualGraphEncoder(ParameterStore& store, const std::string& name, GnnKind kind,
                                   int input_dim, int hidden, int layers, double negative_slope,
                                   Rng& rng)
    : background_(store, name + ".background", kind, input_dim, hidden, layers, negative_slope,
                  rng),
      guidance_(store, name + ".guidance", kind, input_dim, hidden, layers, negative_slope, rng) {}

GraphEncoding DualGraphEncoder::encode(Tape& tape, const Var& node_features,
                                       const Matrix& adjacency) const {
  GraphEncoding out;
  if (adjacency.rows() == 0) return out;
  out.background = background_.encode(tape, node_features, adjacency);
  out.guidance = guidance_.encode(tape, node_features, adjacency);
  out.empty = false;
  return out;
}

}  // namespace wgsum
