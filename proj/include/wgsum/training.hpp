#ifndef WGSUM_TRAINING_HPP_
#define WGSUM_TRAINING_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wgsum/config.hpp"
#include "wgsum/inference.hpp"
#include "wgsum/model.hpp"
#include "wgsum/numerics/adam.hpp"
#include "wgsum/numerics/checkpoint.hpp"

namespace wgsum {

/// Sum of -log max(P(gold_t), floor) over non-PAD positions, together with
/// the number of positions counted.
struct TokenLoss {
  Var total;
  int tokens = 0;
};

TokenLoss token_nll(std::span<const Var> distributions, std::span<const int> gold,
                    double floor = 1e-12);

/// Mean token NLL; PAD-only input gives 0.
Var nll_loss(std::span<const Var> distributions, std::span<const int> gold, double floor = 1e-12);

/// Teacher-forced token NLL of one report.
TokenLoss report_loss(const WGSumModel& model, Tape& tape, const Report& report,
                      const Regularization& reg = {});

/// Mean token NLL over a corpus without dropout.
double corpus_loss(const WGSumModel& model, std::span<const Report> reports);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<MeanRouge> validation;
  double grad_norm = 0.0;
};

struct TrainLog {
  std::string config_hash;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;

  /// One JSON object per line; contains nothing time-dependent.
  std::string to_jsonl() const;
};

struct TrainResult {
  WGSumModel model;  // best by validation ROUGE-1 (last epoch without validation data)
  TrainLog log;
  std::vector<double> epoch_seconds;
};

struct TrainHooks {
  /// Called after every epoch with the current (not best) model.
  std::function<void(const EpochRecord&, const WGSumModel&)> on_epoch;
};

/// Builds the vocabulary from `train`, then runs teacher-forced training.
/// With `out_dir` set, writes train_log.jsonl, timing.jsonl, best.ckpt and
/// last.ckpt there.
TrainResult train(const TrainConfig& config, std::span<const Report> train_set,
                  std::span<const Report> valid_set,
                  const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                  const TrainHooks& hooks = {});

/// Trains an existing model in place for config.epochs epochs.
TrainLog train_model(WGSumModel& model, Adam& optimizer, const TrainConfig& config,
                     std::span<const Report> train_set, std::span<const Report> valid_set,
                     const TrainHooks& hooks = {}, std::vector<double>* epoch_seconds = nullptr,
                     std::vector<NamedMatrix>* best_snapshot = nullptr);

/// Applies filtering and truncation rules of `config` to a loaded split.
std::vector<Report> prepare_split(std::span<const Report> reports, const TrainConfig& config);

void save_model(const std::filesystem::path& path, const WGSumModel& model,
                const Adam* optimizer = nullptr);

/// Rebuilds the model stored at `path`. When `expected` is given its
/// architecture hash must match the stored one.
WGSumModel load_model(const std::filesystem::path& path,
                      const std::optional<ModelConfig>& expected = std::nullopt);

std::string hash_hex(std::uint64_t hash);

}  // namespace wgsum

#endif  // WGSUM_TRAINING_HPP_
