#include "wgsum/model.hpp"

#include <cmath>
#include <stdexcept>

namespace wgsum {

using namespace ad;

WGSumModel::WGSumModel(ModelConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  config_.validate();
  Rng rng(seed);
  const ModelConfig& c = config_;
  const bool lstm = c.variant == Variant::Lstm;
  const int emb = c.input_embedding_dim();
  const int enc = c.encoder_dim();
  const int dec = c.decoder_dim();
  const int graph = c.graph_dim();
  const bool graph_on = c.graph_enabled();

  embedding_ = &params_.add("embedding", vocab_.size(), emb, Init::Uniform, rng, 0.1);

  if (lstm) {
    lstm_encoder_ = BiLstmEncoder(params_, "encoder.lstm", emb, c.encoder_hidden,
                                  c.encoder_layers, rng);
  } else {
    transformer_encoder_ = TransformerEncoder(params_, "encoder.transformer", c.model_dim,
                                              c.ff_dim, c.heads, c.transformer_layers, rng);
  }

  if (graph_on) {
    graph_encoder_ = DualGraphEncoder(params_, "graph", c.gnn, emb, graph, c.graph_layers,
                                      c.gat_negative_slope, rng);
    background_attention_ = AttCon(params_, "decoder.background_attention", graph, enc, rng);
    if (lstm) guidance_attention_ = AttCon(params_, "decoder.guidance_attention", graph, dec, rng);
    guided_update_ = GuidedUpdate(params_, "decoder.guided_update", graph, dec, rng);
  }

  const int expanded = emb + (graph_on ? graph : 0);
  if (lstm) {
    bridge_hidden_ = Linear(params_, "decoder.bridge_hidden", enc, dec, rng);
    bridge_cell_ = Linear(params_, "decoder.bridge_cell", enc, dec, rng);
    decoder_cell_ = LstmCell(params_, "decoder.lstm", expanded, dec, rng);
  } else {
    if (graph_on) {
      input_projection_ = Linear(params_, "decoder.input_projection", expanded, dec, rng);
    }
    for (int l = 0; l < c.transformer_layers; ++l) {
      decoder_layers_.emplace_back(params_, "decoder.transformer.l" + std::to_string(l),
                                   c.model_dim, c.ff_dim, c.heads, rng);
    }
    decoder_norm_ = LayerNorm(params_, "decoder.transformer.ln_final", c.model_dim);
  }

  source_attention_ = AttCon(params_, "decoder.source_attention", enc, dec, rng);
  vocab_projection_ = VocabularyProjection(params_, "decoder.vocab", dec, enc, vocab_.size(), rng);
  if (c.copy) generation_gate_ = GenerationGate(params_, "decoder.pgen", enc + dec + expanded, rng);
}

WordGraph WGSumModel::graph_for(const Report& report) const {
  return build_graph(report, config_.edge_types);
}

Var WGSumModel::embed(Tape& tape, std::span<const int> ids, const Regularization& reg) const {
  Var e = gather_rows(tape.parameter(*embedding_), ids);
  if (reg.dropout > 0.0 && reg.rng != nullptr) e = dropout(e, reg.dropout, *reg.rng);
  return e;
}

EncodedReport WGSumModel::encode(Tape& tape, const Report& report, const WordGraph& graph,
                                 const Regularization& reg) const {
  if (report.findings.empty()) throw std::invalid_argument("encode: empty findings");
  const ModelConfig& c = config_;
  EncodedReport out;
  out.encoding = encode_with_copy(report, vocab_, c.copy);
  const std::vector<int> ids = embedding_ids(out.encoding.source_ids, vocab_);

  Var emb = embed(tape, ids, reg);
  if (c.variant == Variant::Lstm) {
    out.findings = lstm_encoder_.encode(tape, emb);
  } else {
    const int n = static_cast<int>(ids.size());
    Var x = add(scale(emb, std::sqrt(static_cast<double>(c.model_dim))),
                tape.constant(sinusoidal_positions(n, c.model_dim)));
    out.findings = transformer_encoder_.encode(tape, x);
    for (const auto& layer : decoder_layers_) {
      out.cross_memory.push_back(layer.project_memory(tape, out.findings.states));
    }
  }
  out.findings_projected = source_attention_.project_states(tape, out.findings.states);

  if (c.graph_enabled()) {
    if (!graph.empty()) {
      std::vector<int> node_ids;
      node_ids.reserve(graph.nodes.size());
      for (const auto& w : graph.nodes) node_ids.push_back(vocab_.id(w));
      Var features = embed(tape, node_ids, reg);
      out.graph = graph_encoder_.encode(tape, features, graph.adjacency);
    }
    out.background = compute_background(tape, background_attention_, out.graph,
                                        out.findings.summary, c.graph_dim());
    if (!out.graph.empty) {
      if (c.variant == Variant::Lstm) {
        out.guidance_projected = guidance_attention_.project_states(tape, out.graph.guidance);
      }
      if (c.update_source == UpdateSource::GraphMean) {
        out.guidance_mean = mean_rows(out.graph.guidance);
      }
    }
  }
  return out;
}

DecoderState WGSumModel::initial_state(Tape& tape, const EncodedReport& encoded) const {
  DecoderState s;
  if (config_.variant == Variant::Lstm) {
    s.lstm.hidden = ad::tanh(bridge_hidden_(tape, encoded.findings.summary));
    s.lstm.cell = bridge_cell_(tape, encoded.findings.summary_cell);
  } else {
    s.self_cache.resize(decoder_layers_.size());
  }
  return s;
}

StepOutput WGSumModel::step(Tape& tape, const EncodedReport& encoded, const DecoderState& state,
                            int previous_token, const Regularization& reg) const {
  const ModelConfig& c = config_;
  const int embed_id = previous_token < vocab_.size() ? previous_token : Vocabulary::kUnk;
  const int ids[1] = {embed_id};
  Var e = embed(tape, ids, reg);

  StepOutput out;
  out.next = state;
  const bool guided = c.graph_enabled() && !encoded.graph.empty;

  if (c.variant == Variant::Lstm) {
    out.expanded_input = c.graph_enabled() ? expand_input(e, encoded.background) : e;
    GraphEncoding graph = c.graph_enabled() ? encoded.graph : GraphEncoding{};
    GuidedLstmOutput r = lstm_guided_step(tape, decoder_cell_, guidance_attention_, state.lstm,
                                          out.expanded_input, graph, encoded.guidance_projected,
                                          c.guidance_key);
    out.pre_state = r.pre_hidden;
    out.guidance = r.guidance;
    out.guidance_weights = r.guidance_weights;
    out.next.lstm.cell = r.cell;
  } else {
    Var scaled = scale(e, std::sqrt(static_cast<double>(c.model_dim)));
    out.expanded_input = c.graph_enabled() ? expand_input(scaled, encoded.background) : scaled;
    Var x = c.graph_enabled() ? input_projection_(tape, out.expanded_input) : scaled;
    const Matrix pos = sinusoidal_positions(state.position + 1, c.model_dim);
    x = add(x, tape.constant(pos.row(state.position)));
    Var penultimate = x;
    for (std::size_t l = 0; l < decoder_layers_.size(); ++l) {
      if (l + 1 == decoder_layers_.size()) penultimate = x;
      x = decoder_layers_[l].step(tape, x, out.next.self_cache[l], encoded.cross_memory[l]);
    }
    out.pre_state = decoder_norm_(tape, x);
    if (guided) {
      GuidanceResult g = transformer_guidance(penultimate, encoded.graph.guidance, c.scale_guidance);
      out.guidance = g.guidance;
      out.guidance_weights = g.weights;
    }
    out.next.position = state.position + 1;
  }

  if (guided) {
    const Var& source =
        c.update_source == UpdateSource::GraphMean ? encoded.guidance_mean : out.guidance;
    out.state = guided_update_(tape, out.pre_state, source);
  } else {
    out.state = out.pre_state;
  }
  if (c.variant == Variant::Lstm) out.next.lstm.hidden = out.state;

  AttConResult ctx = source_attention_.apply_projected(tape, encoded.findings.states,
                                                       encoded.findings_projected, out.state);
  out.copy_attention = ctx.weights;
  out.vocab_distribution = vocab_projection_(tape, out.state, ctx.context);
  if (c.copy) {
    out.p_gen = generation_gate_(tape, ctx.context, out.state, out.expanded_input);
    out.distribution =
        pointer_mix(out.vocab_distribution, out.copy_attention, out.p_gen, encoded.encoding);
  } else {
    out.distribution = out.vocab_distribution;
  }
  return out;
}

std::vector<Var> WGSumModel::teacher_forced(Tape& tape, const EncodedReport& encoded,
                                            const Regularization& reg) const {
  std::vector<Var> dists;
  dists.reserve(encoded.encoding.target_ids.size());
  DecoderState state = initial_state(tape, encoded);
  int previous = Vocabulary::kBos;
  for (int gold : encoded.encoding.target_ids) {
    StepOutput out = step(tape, encoded, state, previous, reg);
    dists.push_back(out.distribution);
    state = std::move(out.next);
    previous = gold;
  }
  return dists;
}

}  // namespace wgsum
