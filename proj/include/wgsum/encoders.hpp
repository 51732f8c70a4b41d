#ifndef WGSUM_ENCODERS_HPP_
#define WGSUM_ENCODERS_HPP_

#include <string>
#include <vector>

#include "wgsum/config.hpp"
#include "wgsum/layers.hpp"
#include "wgsum/numerics/tensor.hpp"

namespace wgsum {

struct EncoderOutput {
  /// N x d per-token states h^x.
  Var states;
  /// 1 x d summary h_f: final hidden state (BiLSTM) or row mean (Transformer).
  Var summary;
  /// 1 x d final cell state of the BiLSTM top layer; invalid for Transformer.
  Var summary_cell;
};

/// Stacked bidirectional LSTM. Each direction has `hidden` units, so states
/// are N x 2*hidden. The summary concatenates the forward state at the last
/// token with the backward state at the first token.
class BiLstmEncoder {
 public:
  BiLstmEncoder() = default;
  BiLstmEncoder(ParameterStore& store, const std::string& name, int input_dim, int hidden,
                int layers, Rng& rng);

  EncoderOutput encode(Tape& tape, const Var& inputs) const;

 private:
  std::vector<LstmCell> forward_;
  std::vector<LstmCell> backward_;
};

/// Pre-norm Transformer layer: x += MHA(LN(x)); x += FFN(LN(x)).
class TransformerEncoderLayer {
 public:
  TransformerEncoderLayer() = default;
  TransformerEncoderLayer(ParameterStore& store, const std::string& name, int dim, int ff,
                          int heads, Rng& rng);

  Var operator()(Tape& tape, const Var& x) const;

 private:
  LayerNorm attention_norm_;
  MultiHeadAttention attention_;
  LayerNorm ff_norm_;
  FeedForward ff_;
};

class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(ParameterStore& store, const std::string& name, int dim, int ff, int heads,
                     int layers, Rng& rng);

  /// `inputs` already carries position information.
  EncoderOutput encode(Tape& tape, const Var& inputs) const;

 private:
  std::vector<TransformerEncoderLayer> layers_;
  LayerNorm final_norm_;
};

/// relu(A_norm H W + b), A_norm symmetrically normalized with self-loops.
class GcnLayer {
 public:
  GcnLayer() = default;
  GcnLayer(ParameterStore& store, const std::string& name, int in, int out, Rng& rng);

  Var operator()(Tape& tape, const Var& node_states, const Matrix& normalized_adjacency) const;

  Linear& transform() { return transform_; }

 private:
  Linear transform_;
};

/// Single-head graph attention:
///   e_ij = leaky_relu(a_src . Wh_i + a_dst . Wh_j) over neighbours j (A_ij = 1),
///   alpha = row softmax of e, out = elu(alpha Wh + b).
class GatLayer {
 public:
  GatLayer() = default;
  GatLayer(ParameterStore& store, const std::string& name, int in, int out, double negative_slope,
           Rng& rng);

  Var operator()(Tape& tape, const Var& node_states, const Matrix& adjacency) const;
  /// The |V| x |V| attention matrix alpha.
  Var attention(Tape& tape, const Var& transformed, const Matrix& adjacency) const;

  Parameter& weight() const { return *weight_; }
  Parameter& source_vector() const { return *attn_src_; }
  Parameter& target_vector() const { return *attn_dst_; }
  Parameter& bias() const { return *bias_; }

 private:
  Parameter* weight_ = nullptr;
  Parameter* attn_src_ = nullptr;
  Parameter* attn_dst_ = nullptr;
  Parameter* bias_ = nullptr;
  double negative_slope_ = 0.2;
};

/// A stack of GCN or GAT layers.
class GraphEncoder {
 public:
  GraphEncoder() = default;
  GraphEncoder(ParameterStore& store, const std::string& name, GnnKind kind, int input_dim,
               int hidden, int layers, double negative_slope, Rng& rng);

  Var encode(Tape& tape, const Var& node_features, const Matrix& adjacency) const;

 private:
  GnnKind kind_ = GnnKind::Gat;
  std::vector<GcnLayer> gcn_;
  std::vector<GatLayer> gat_;
};

struct GraphEncoding {
  Var background;  // z^b, |V| x d
  Var guidance;    // z^l, |V| x d
  bool empty = true;
};

/// Two independently parameterized graph encoders over the same (V, A).
class DualGraphEncoder {
 public:
  DualGraphEncoder() = default;
  DualGraphEncoder(ParameterStore& store, const std::string& name, GnnKind kind, int input_dim,
                   int hidden, int layers, double negative_slope, Rng& rng);

  /// An empty adjacency yields a flagged empty encoding.
  GraphEncoding encode(Tape& tape, const Var& node_features, const Matrix& adjacency) const;

 private:
  GraphEncoder background_;
  GraphEncoder guidance_;
};

}  // namespace wgsum

#endif  // WGSUM_ENCODERS_HPP_
