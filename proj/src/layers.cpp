#include "wgsum/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace wgsum {

using namespace ad;

Linear::Linear(ParameterStore& store, const std::string& name, int in, int out, Rng& rng,
               bool bias) {
  weight_ = &store.add(name + ".W", in, out, Init::XavierUniform, rng);
  if (bias) bias_ = &store.add(name + ".b", 1, out, Init::Zeros, rng);
}

Var Linear::operator()(Tape& tape, const Var& x) const {
  Var y = matmul(x, tape.parameter(*weight_));
  if (bias_ != nullptr) y = add(y, tape.parameter(*bias_));
  return y;
}

LayerNorm::LayerNorm(ParameterStore& store, const std::string& name, int dim) {
  Rng unused(0);
  gain_ = &store.add(name + ".gain", 1, dim, Init::Zeros, unused);
  gain_->value.setOnes();
  bias_ = &store.add(name + ".bias", 1, dim, Init::Zeros, unused);
}

Var LayerNorm::operator()(Tape& tape, const Var& x) const {
  return layer_norm_rows(x, tape.parameter(*gain_), tape.parameter(*bias_));
}

LstmCell::LstmCell(ParameterStore& store, const std::string& name, int input_dim,
                   int hidden_dim, Rng& rng)
    : input_dim_(input_dim), hidden_dim_(hidden_dim) {
  input_weight_ = &store.add(name + ".Wx", input_dim, 4 * hidden_dim, Init::XavierUniform, rng);
  recurrent_weight_ =
      &store.add(name + ".Wh", hidden_dim, 4 * hidden_dim, Init::XavierUniform, rng);
  bias_ = &store.add(name + ".b", 1, 4 * hidden_dim, Init::Zeros, rng);
}

Var LstmCell::project_inputs(Tape& tape, const Var& inputs) const {
  return add(matmul(inputs, tape.parameter(*input_weight_)), tape.parameter(*bias_));
}

LstmState LstmCell::step_projected(Tape& tape, const Var& projected_input,
                                   const LstmState& prev) const {
  const Eigen::Index h = hidden_dim_;
  Var gates = add(projected_input, matmul(prev.hidden, tape.parameter(*recurrent_weight_)));
  Var i = sigmoid(slice_cols(gates, 0, h));
  Var f = sigmoid(slice_cols(gates, h, h));
  Var g = ad::tanh(slice_cols(gates, 2 * h, h));
  Var o = sigmoid(slice_cols(gates, 3 * h, h));
  Var cell = add(mul(f, prev.cell), mul(i, g));
  Var hidden = mul(o, ad::tanh(cell));
  return {hidden, cell};
}

LstmState LstmCell::step(Tape& tape, const Var& input, const LstmState& prev) const {
  return step_projected(tape, project_inputs(tape, input), prev);
}

LstmState LstmCell::zero_state(Tape& tape) const {
  return {tape.constant(Matrix::Zero(1, hidden_dim_)), tape.constant(Matrix::Zero(1, hidden_dim_))};
}

MultiHeadAttention::MultiHeadAttention(ParameterStore& store, const std::string& name, int dim,
                                       int heads, Rng& rng)
    : heads_(heads), dim_(dim) {
  if (heads <= 0 || dim % heads != 0) {
    throw std::invalid_argument("attention width " + std::to_string(dim) +
                                " is not divisible by " + std::to_string(heads) + " heads");
  }
  query_ = Linear(store, name + ".q", dim, dim, rng);
  key_ = Linear(store, name + ".k", dim, dim, rng);
  value_ = Linear(store, name + ".v", dim, dim, rng);
  output_ = Linear(store, name + ".o", dim, dim, rng);
}

AttentionMemory MultiHeadAttention::project_memory(Tape& tape, const Var& source) const {
  return {key_(tape, source), value_(tape, source)};
}

Var MultiHeadAttention::attend(Tape& tape, const Var& queries, const AttentionMemory& memory) const {
  const int head_dim = dim_ / heads_;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Var q = query_(tape, queries);
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(heads_));
  for (int h = 0; h < heads_; ++h) {
    Var qh = slice_cols(q, h * head_dim, head_dim);
    Var kh = slice_cols(memory.keys, h * head_dim, head_dim);
    Var vh = slice_cols(memory.values, h * head_dim, head_dim);
    Var weights = softmax_rows(scale(matmul_nt(qh, kh), scale_factor));
    heads.push_back(matmul(weights, vh));
  }
  Var joined = heads_ == 1 ? heads.front() : concat_cols(heads);
  return output_(tape, joined);
}

Var MultiHeadAttention::attend_incremental(Tape& tape, const Var& query_row,
                                           AttentionMemory& cache) const {
  AttentionMemory step = project_memory(tape, query_row);
  if (cache.keys.valid()) {
    cache.keys = concat_rows({cache.keys, step.keys});
    cache.values = concat_rows({cache.values, step.values});
  } else {
    cache = step;
  }
  return attend(tape, query_row, cache);
}

FeedForward::FeedForward(ParameterStore& store, const std::string& name, int dim, int hidden,
                         Rng& rng)
    : inner_(store, name + ".inner", dim, hidden, rng),
      outer_(store, name + ".outer", hidden, dim, rng) {}

Var FeedForward::operator()(Tape& tape, const Var& x) const {
  return outer_(tape, gelu(inner_(tape, x)));
}

TransformerDecoderLayer::TransformerDecoderLayer(ParameterStore& store, const std::string& name,
                                                 int dim, int ff, int heads, Rng& rng)
    : self_norm_(store, name + ".ln_self", dim),
      self_attention_(store, name + ".self", dim, heads, rng),
      cross_norm_(store, name + ".ln_cross", dim),
      cross_attention_(store, name + ".cross", dim, heads, rng),
      ff_norm_(store, name + ".ln_ff", dim),
      ff_(store, name + ".ff", dim, ff, rng) {}

AttentionMemory TransformerDecoderLayer::project_memory(Tape& tape,
                                                        const Var& encoder_states) const {
  return cross_attention_.project_memory(tape, encoder_states);
}

Var TransformerDecoderLayer::step(Tape& tape, const Var& x, AttentionMemory& self_cache,
                                  const AttentionMemory& memory) const {
  Var h = add(x, self_attention_.attend_incremental(tape, self_norm_(tape, x), self_cache));
  h = add(h, cross_attention_.attend(tape, cross_norm_(tape, h), memory));
  return add(h, ff_(tape, ff_norm_(tape, h)));
}

Matrix sinusoidal_positions(int length, int dim) {
  Matrix pe(length, dim);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
      pe(pos, i) = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  }
  return pe;
}

}  // namespace wgsum
