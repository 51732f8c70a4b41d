#ifndef WGSUM_LAYERS_HPP_
#define WGSUM_LAYERS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "wgsum/numerics/ops.hpp"
#include "wgsum/numerics/tensor.hpp"

namespace wgsum {

/// x * W + b over 1 x in rows (or N x in stacks).
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, int in, int out, Rng& rng,
         bool bias = true);

  Var operator()(Tape& tape, const Var& x) const;

  int in_features() const { return static_cast<int>(weight_->value.rows()); }
  int out_features() const { return static_cast<int>(weight_->value.cols()); }
  Parameter& weight() const { return *weight_; }
  Parameter* bias() const { return bias_; }

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& name, int dim);

  Var operator()(Tape& tape, const Var& x) const;

 private:
  Parameter* gain_ = nullptr;
  Parameter* bias_ = nullptr;
};

struct LstmState {
  Var hidden;
  Var cell;
};

/// Gate order i, f, g, o:
///   c' = f * c + i * g,   h' = o * tanh(c').
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(ParameterStore& store, const std::string& name, int input_dim, int hidden_dim,
           Rng& rng);

  /// x W_x + b for every row of `inputs` at once.
  Var project_inputs(Tape& tape, const Var& inputs) const;
  /// One step from an already projected input row.
  LstmState step_projected(Tape& tape, const Var& projected_input, const LstmState& prev) const;
  LstmState step(Tape& tape, const Var& input, const LstmState& prev) const;

  int hidden_dim() const { return hidden_dim_; }
  int input_dim() const { return input_dim_; }
  LstmState zero_state(Tape& tape) const;

 private:
  Parameter* input_weight_ = nullptr;
  Parameter* recurrent_weight_ = nullptr;
  Parameter* bias_ = nullptr;
  int input_dim_ = 0;
  int hidden_dim_ = 0;
};

/// Keys and values of one attention source, projected once.
struct AttentionMemory {
  Var keys;
  Var values;
};

class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore& store, const std::string& name, int dim, int heads, Rng& rng);

  AttentionMemory project_memory(Tape& tape, const Var& source) const;
  /// Rows of `queries` attend over every row of the memory.
  Var attend(Tape& tape, const Var& queries, const AttentionMemory& memory) const;
  /// Self-attention of a single new row, appending its key/value to `cache`.
  Var attend_incremental(Tape& tape, const Var& query_row, AttentionMemory& cache) const;

 private:
  Linear query_;
  Linear key_;
  Linear value_;
  Linear output_;
  int heads_ = 1;
  int dim_ = 0;
};

class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(ParameterStore& store, const std::string& name, int dim, int hidden, Rng& rng);

  Var operator()(Tape& tape, const Var& x) const;

 private:
  Linear inner_;
  Linear outer_;
};

/// Pre-norm decoder layer run one position at a time: masked self-attention
/// over the cached prefix, attention over the encoder memory, feed-forward.
class TransformerDecoderLayer {
 public:
  TransformerDecoderLayer() = default;
  TransformerDecoderLayer(ParameterStore& store, const std::string& name, int dim, int ff,
                          int heads, Rng& rng);

  AttentionMemory project_memory(Tape& tape, const Var& encoder_states) const;
  Var step(Tape& tape, const Var& x, AttentionMemory& self_cache,
           const AttentionMemory& memory) const;

 private:
  LayerNorm self_norm_;
  MultiHeadAttention self_attention_;
  LayerNorm cross_norm_;
  MultiHeadAttention cross_attention_;
  LayerNorm ff_norm_;
  FeedForward ff_;
};

/// Standard sinusoidal position table, `length` x `dim`.
Matrix sinusoidal_positions(int length, int dim);

}  // namespace wgsum

#endif  // WGSUM_LAYERS_HPP_
