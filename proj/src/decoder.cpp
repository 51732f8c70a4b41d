#include "wgsum/decoder.hpp"

#include <cmath>
#include <stdexcept>

namespace wgsum {

using namespace ad;

AttCon::AttCon(ParameterStore& store, const std::string& name, int state_dim, int query_dim,
               Rng& rng) {
  state_weight_ = &store.add(name + ".W_state", state_dim, state_dim, Init::XavierUniform, rng);
  query_weight_ = &store.add(name + ".W_query", query_dim, state_dim, Init::XavierUniform, rng);
  score_vector_ = &store.add(name + ".p", state_dim, 1, Init::XavierUniform, rng);
}

Var AttCon::project_states(Tape& tape, const Var& states) const {
  return matmul(states, tape.parameter(*state_weight_));
}

AttConResult AttCon::operator()(Tape& tape, const Var& states, const Var& query) const {
  return apply_projected(tape, states, project_states(tape, states), query);
}

AttConResult AttCon::apply_projected(Tape& tape, const Var& states, const Var& projected_states,
                                     const Var& query) const {
  if (states.rows() == 0) throw std::invalid_argument("att_con: no states to attend over");
  Var q = matmul(query, tape.parameter(*query_weight_));
  Var hidden = ad::tanh(add(projected_states, q));
  Var scores = transpose(matmul(hidden, tape.parameter(*score_vector_)));
  Var weights = softmax_rows(scores);
  return {matmul(weights, states), weights};
}

BackgroundInfo compute_background(Tape& tape, const AttCon& attention, const GraphEncoding& graph,
                                  const Var& findings_summary, int graph_dim) {
  BackgroundInfo info;
  if (graph.empty) {
    info.vector = tape.constant(Matrix::Zero(1, graph_dim));
    return info;
  }
  AttConResult r = attention(tape, graph.background, findings_summary);
  info.vector = r.context;
  info.weights = r.weights;
  info.empty = false;
  return info;
}

Var expand_input(const Var& previous_embedding, const BackgroundInfo& background) {
  return concat_cols({previous_embedding, background.vector});
}

GuidedUpdate::GuidedUpdate(ParameterStore& store, const std::string& name, int guidance_dim,
                           int state_dim, Rng& rng)
    : gate_(store, name + ".gate", guidance_dim, state_dim, rng),
      update_(store, name + ".update", guidance_dim, state_dim, rng) {}

Var GuidedUpdate::operator()(Tape& tape, const Var& pre_state, const Var& guidance) const {
  Var gate = sigmoid(gate_(tape, guidance));
  Var update = ad::tanh(update_(tape, guidance));
  return add(pre_state, mul(gate, update));
}

GuidedLstmOutput lstm_guided_step(Tape& tape, const LstmCell& cell, const AttCon& guidance_attention,
                                  const LstmState& previous, const Var& expanded_input,
                                  const GraphEncoding& graph, const Var& projected_guidance_states,
                                  GuidanceKey key) {
  LstmState next = cell.step(tape, expanded_input, previous);
  GuidedLstmOutput out;
  out.cell = next.cell;
  out.pre_hidden = next.hidden;
  if (!graph.empty) {
    const Var& query = key == GuidanceKey::Cell ? next.cell : next.hidden;
    AttConResult r = projected_guidance_states.valid()
                         ? guidance_attention.apply_projected(tape, graph.guidance,
                                                              projected_guidance_states, query)
                         : guidance_attention(tape, graph.guidance, query);
    out.guidance = r.context;
    out.guidance_weights = r.weights;
  }
  return out;
}

GuidanceResult transformer_guidance(const Var& penultimate, const Var& guidance_states,
                                    bool scaled) {
  if (penultimate.cols() != guidance_states.cols()) {
    throw ShapeError("transformer_guidance: state " + shape_string(penultimate.value()) +
                     " incompatible with node states " + shape_string(guidance_states.value()));
  }
  Var scores = matmul_nt(penultimate, guidance_states);
  if (scaled) scores = scale(scores, 1.0 / std::sqrt(static_cast<double>(penultimate.cols())));
  Var weights = softmax_rows(scores);
  return {matmul(weights, guidance_states), weights};
}

VocabularyProjection::VocabularyProjection(ParameterStore& store, const std::string& name,
                                           int state_dim, int context_dim, int vocab_size, Rng& rng)
    : hidden_(store, name + ".hidden", state_dim + context_dim, state_dim, rng),
      output_(store, name + ".output", state_dim, vocab_size, rng) {}

Var VocabularyProjection::operator()(Tape& tape, const Var& state, const Var& context) const {
  Var h = ad::tanh(hidden_(tape, concat_cols({state, context})));
  return softmax_rows(output_(tape, h));
}

GenerationGate::GenerationGate(ParameterStore& store, const std::string& name, int input_dim,
                               Rng& rng)
    : linear_(store, name, input_dim, 1, rng) {}

Var GenerationGate::operator()(Tape& tape, const Var& context, const Var& state,
                               const Var& expanded_input) const {
  return sigmoid(linear_(tape, concat_cols({context, state, expanded_input})));
}

Var pointer_mix(const Var& vocab_distribution, const Var& copy_attention, const Var& p_gen,
                const CopyEncoding& encoding) {
  Tape& tape = *vocab_distribution.tape();
  const Eigen::Index vocab = vocab_distribution.cols();
  const Eigen::Index width = encoding.extended_size;
  if (width < vocab) {
    throw ShapeError("pointer_mix: extended size " + std::to_string(width) +
                     " smaller than vocabulary " + std::to_string(vocab));
  }
  Var generated = vocab_distribution;
  if (width > vocab) {
    generated = concat_cols({vocab_distribution, tape.constant(Matrix::Zero(1, width - vocab))});
  }
  Var copied = scatter_cols(copy_attention, encoding.source_ids, width);
  return add(mul(p_gen, generated), mul(affine(p_gen, -1.0, 1.0), copied));
}

}  // namespace wgsum
