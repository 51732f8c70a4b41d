#ifndef WGSUM_CONFIG_HPP_
#define WGSUM_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "wgsum/wordgraph.hpp"

namespace wgsum {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Variant { Lstm, Transformer };
enum class GnnKind { Gcn, Gat, Off };
/// Which LSTM state keys the dynamic guidance attention.
enum class GuidanceKey { Cell, Hidden };
/// Input of the gated state update: the per-step guidance vector, or the
/// mean of the guidance-branch node states (literal graph-input reading).
enum class UpdateSource { Guidance, GraphMean };
enum class DecodeMode { Greedy, Beam };

struct ModelConfig {
  Variant variant = Variant::Lstm;
  GnnKind gnn = GnnKind::Gat;
  bool copy = true;
  EdgeTypeSet edge_types = EdgeTypeSet::all();

  // LSTM stack.
  int embedding_dim = 100;
  int encoder_hidden = 100;  // per direction
  int encoder_layers = 2;
  int decoder_hidden = 200;

  // Transformer stack.
  int model_dim = 512;
  int ff_dim = 2048;
  int heads = 8;
  int transformer_layers = 6;

  int graph_hidden = 200;  // LSTM stack; the Transformer stack uses model_dim
  int graph_layers = 2;
  double gat_negative_slope = 0.2;

  GuidanceKey guidance_key = GuidanceKey::Cell;
  UpdateSource update_source = UpdateSource::Guidance;
  bool scale_guidance = false;

  bool graph_enabled() const { return gnn != GnnKind::Off; }
  /// Width of the findings states h^x.
  int encoder_dim() const { return variant == Variant::Lstm ? 2 * encoder_hidden : model_dim; }
  int decoder_dim() const { return variant == Variant::Lstm ? decoder_hidden : model_dim; }
  int graph_dim() const { return variant == Variant::Lstm ? graph_hidden : model_dim; }
  int input_embedding_dim() const {
    return variant == Variant::Lstm ? embedding_dim : model_dim;
  }
  void validate() const;
};

struct TrainConfig {
  ModelConfig model;

  double learning_rate = 1e-3;
  int batch_size = 8;
  int epochs = 30;
  std::uint64_t seed = 1;
  double dropout = 0.5;
  double clip_norm = 2.0;
  int min_count = 1;
  int max_findings = 200;
  int max_impression = 50;

  int max_decode_length = 50;
  DecodeMode decode_mode = DecodeMode::Greedy;
  int beam_width = 4;

  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::vector<std::uint64_t> ablation_seeds{1, 2, 3};

  void validate() const;
};

/// Parses `key = value` lines; '#' starts a comment. Unknown keys are errors.
TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);
/// Applies one override with the same key syntax as the file.
void set_config_value(TrainConfig& config, const std::string& key, const std::string& value);
/// Canonical text; parse_config(to_text(c)) reproduces c.
std::string to_text(const TrainConfig& config);

/// Stable hash over every field that shapes the parameter set.
std::uint64_t architecture_hash(const ModelConfig& model);

std::string to_string(Variant v);
std::string to_string(GnnKind g);

}  // namespace wgsum

#endif  // WGSUM_CONFIG_HPP_
