#ifndef WGSUM_DECODER_HPP_
#define WGSUM_DECODER_HPP_

#include <string>
#include <vector>

#include "wgsum/config.hpp"
#include "wgsum/corpus.hpp"
#include "wgsum/encoders.hpp"
#include "wgsum/layers.hpp"
#include "wgsum/numerics/tensor.hpp"

namespace wgsum {

struct AttConResult {
  Var context;  // 1 x d_state
  Var weights;  // 1 x M, sums to one
};

/// Additive attention followed by a weighted sum:
///   e_i = p^T tanh(W_s state_i + W_q query),  a = softmax(e),  c = sum_i a_i state_i.
class AttCon {
 public:
  AttCon() = default;
  AttCon(ParameterStore& store, const std::string& name, int state_dim, int query_dim, Rng& rng);

  /// states W_s, reusable across queries against the same states.
  Var project_states(Tape& tape, const Var& states) const;
  AttConResult operator()(Tape& tape, const Var& states, const Var& query) const;
  AttConResult apply_projected(Tape& tape, const Var& states, const Var& projected_states,
                               const Var& query) const;

  Parameter& state_weight() const { return *state_weight_; }
  Parameter& query_weight() const { return *query_weight_; }
  Parameter& score_vector() const { return *score_vector_; }

 private:
  Parameter* state_weight_ = nullptr;
  Parameter* query_weight_ = nullptr;
  Parameter* score_vector_ = nullptr;
};

struct BackgroundInfo {
  Var vector;   // h^b, 1 x graph_dim
  Var weights;  // a^b over graph nodes; invalid when the graph is empty
  bool empty = true;
};

/// h^b = AttCon(z^b, h_f). Computed once per report; an empty graph gives a
/// zero vector of width `graph_dim` and the empty flag.
BackgroundInfo compute_background(Tape& tape, const AttCon& attention, const GraphEncoding& graph,
                                  const Var& findings_summary, int graph_dim);

/// y' = [y; h^b].
Var expand_input(const Var& previous_embedding, const BackgroundInfo& background);

/// Gated state update s_t = s'_t + sigmoid(f_g(h)) * tanh(f_u(h)).
class GuidedUpdate {
 public:
  GuidedUpdate() = default;
  GuidedUpdate(ParameterStore& store, const std::string& name, int guidance_dim, int state_dim,
               Rng& rng);

  Var operator()(Tape& tape, const Var& pre_state, const Var& guidance) const;

  Linear& gate() { return gate_; }
  Linear& update() { return update_; }

 private:
  Linear gate_;
  Linear update_;
};

struct GuidedLstmOutput {
  Var cell;            // c_t
  Var pre_hidden;      // s'_t
  Var guidance;        // h^l_t; invalid without a graph
  Var guidance_weights;
};

/// [c_t, s'_t] = LSTM(c_{t-1}, s_{t-1}, y'), then h^l_t = AttCon(z^l, key)
/// with key = c_t (or s'_t). Guidance is skipped for an empty graph.
GuidedLstmOutput lstm_guided_step(Tape& tape, const LstmCell& cell, const AttCon& guidance_attention,
                                  const LstmState& previous, const Var& expanded_input,
                                  const GraphEncoding& graph, const Var& projected_guidance_states,
                                  GuidanceKey key);

struct GuidanceResult {
  Var guidance;  // 1 x d
  Var weights;   // 1 x |V|
};

/// h^l_t = softmax(c_t z^l^T) z^l, optionally scaled by 1/sqrt(d).
GuidanceResult transformer_guidance(const Var& penultimate, const Var& guidance_states, bool scaled);

/// P_vocab = softmax(Q' tanh(Q [s_t; g_t])).
class VocabularyProjection {
 public:
  VocabularyProjection() = default;
  VocabularyProjection(ParameterStore& store, const std::string& name, int state_dim,
                       int context_dim, int vocab_size, Rng& rng);

  Var operator()(Tape& tape, const Var& state, const Var& context) const;

  Linear& hidden() { return hidden_; }
  Linear& output() { return output_; }

 private:
  Linear hidden_;
  Linear output_;
};

/// p_gen = sigmoid(w [g_t; s_t; y'_{t-1}] + b).
class GenerationGate {
 public:
  GenerationGate() = default;
  GenerationGate(ParameterStore& store, const std::string& name, int input_dim, Rng& rng);

  Var operator()(Tape& tape, const Var& context, const Var& state, const Var& expanded_input) const;

  Linear& linear() { return linear_; }

 private:
  Linear linear_;
};

/// P = p_gen * [P_vocab, 0...] + (1 - p_gen) * scatter(a_t onto source ids)
/// over the extended vocabulary.
Var pointer_mix(const Var& vocab_distribution, const Var& copy_attention, const Var& p_gen,
                const CopyEncoding& encoding);

}  // namespace wgsum

#endif  // WGSUM_DECODER_HPP_
