#ifndef WGSUM_MODEL_HPP_
#define WGSUM_MODEL_HPP_

#include <cstdint>
#include <vector>

#include "wgsum/config.hpp"
#include "wgsum/corpus.hpp"
#include "wgsum/decoder.hpp"
#include "wgsum/encoders.hpp"
#include "wgsum/layers.hpp"
#include "wgsum/numerics/tensor.hpp"
#include "wgsum/wordgraph.hpp"

namespace wgsum {

/// Dropout on embedding lookups; rate 0 (inference, gradient checks) is a no-op.
struct Regularization {
  double dropout = 0.0;
  Rng* rng = nullptr;
};

/// Everything the decoder reuses across the steps of one report.
struct EncodedReport {
  CopyEncoding encoding;
  EncoderOutput findings;
  Var findings_projected;
  GraphEncoding graph;
  BackgroundInfo background;
  Var guidance_projected;
  Var guidance_mean;
  std::vector<AttentionMemory> cross_memory;
};

struct DecoderState {
  LstmState lstm;
  std::vector<AttentionMemory> self_cache;
  int position = 0;
};

struct StepOutput {
  /// Extended-vocabulary distribution (base vocabulary when copy is off).
  Var distribution;
  Var vocab_distribution;
  Var copy_attention;
  Var p_gen;  // invalid when copy is off
  Var guidance;
  Var guidance_weights;
  Var pre_state;  // s'_t
  Var state;      // s_t
  Var expanded_input;
  DecoderState next;
};

/// Word-graph-guided pointer-generator summarizer. With gnn = off it is the
/// plain pointer-generator (copy on) or sequence-to-sequence (copy off)
/// baseline of the same backbone.
class WGSumModel {
 public:
  WGSumModel(ModelConfig config, Vocabulary vocab, std::uint64_t seed);
  WGSumModel(const WGSumModel&) = delete;
  WGSumModel& operator=(const WGSumModel&) = delete;
  WGSumModel(WGSumModel&&) = default;

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  /// Graph that `report` is decoded with under this model's edge configuration.
  WordGraph graph_for(const Report& report) const;

  EncodedReport encode(Tape& tape, const Report& report, const WordGraph& graph,
                       const Regularization& reg = {}) const;
  DecoderState initial_state(Tape& tape, const EncodedReport& encoded) const;
  /// `previous_token` is an extended id; copied OOVs are embedded as UNK.
  StepOutput step(Tape& tape, const EncodedReport& encoded, const DecoderState& state,
                  int previous_token, const Regularization& reg = {}) const;

  /// Teacher-forced step distributions for targets encoded.target_ids.
  std::vector<Var> teacher_forced(Tape& tape, const EncodedReport& encoded,
                                  const Regularization& reg = {}) const;

 private:
  Var embed(Tape& tape, std::span<const int> ids, const Regularization& reg) const;

  ModelConfig config_;
  Vocabulary vocab_;
  ParameterStore params_;

  Parameter* embedding_ = nullptr;
  BiLstmEncoder lstm_encoder_;
  TransformerEncoder transformer_encoder_;
  DualGraphEncoder graph_encoder_;

  AttCon background_attention_;
  AttCon guidance_attention_;
  GuidedUpdate guided_update_;
  AttCon source_attention_;
  VocabularyProjection vocab_projection_;
  GenerationGate generation_gate_;

  Linear bridge_hidden_;
  Linear bridge_cell_;
  LstmCell decoder_cell_;

  Linear input_projection_;
  std::vector<TransformerDecoderLayer> decoder_layers_;
  LayerNorm decoder_norm_;
};

}  // namespace wgsum

#endif  // WGSUM_MODEL_HPP_
