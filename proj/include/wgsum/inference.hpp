#ifndef WGSUM_INFERENCE_HPP_
#define WGSUM_INFERENCE_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wgsum/config.hpp"
#include "wgsum/model.hpp"
#include "wgsum/rouge.hpp"

namespace wgsum {

struct GenerateOptions {
  DecodeMode mode = DecodeMode::Greedy;
  int max_length = 50;
  int beam_width = 4;
};

GenerateOptions generate_options(const TrainConfig& config);

struct Generation {
  /// Extended ids, EOS excluded.
  std::vector<int> ids;
  /// Surface tokens; copied OOVs come back as their source form.
  std::vector<std::string> tokens;
  /// Length-normalized log-probability for beam search, total for greedy.
  double score = 0.0;
};

Generation generate(const WGSumModel& model, const Report& report,
                    const GenerateOptions& options = {});

struct LengthBucket {
  int low = 0;
  int high = 0;
  bool inclusive_high = false;
  std::string label() const;
  bool contains(std::size_t length) const;
};

/// [15,20), [20,25), [25,30), [30,35), [35,40].
std::vector<LengthBucket> default_buckets();

struct MeanRouge {
  std::size_t count = 0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
};

struct BucketResult {
  LengthBucket bucket;
  MeanRouge scores;
};

struct ExampleResult {
  std::string id;
  std::vector<std::string> hypothesis;
  RougeSet scores;
};

struct MetricReport {
  MeanRouge overall;
  /// Only buckets that received at least one example.
  std::vector<BucketResult> buckets;
  std::vector<ExampleResult> examples;
};

/// Macro-averaged F1 over (reference, hypothesis) pairs, bucketed by
/// reference length.
MetricReport score_corpus(std::span<const std::vector<std::string>> references,
                          std::span<const std::vector<std::string>> hypotheses,
                          std::span<const std::string> ids,
                          const std::vector<LengthBucket>& buckets = default_buckets());

MetricReport evaluate(const WGSumModel& model, std::span<const Report> reports,
                      const GenerateOptions& options = {},
                      const std::vector<LengthBucket>& buckets = default_buckets());

nlohmann::json metrics_to_json(const MetricReport& report);
std::string metrics_table(const MetricReport& report);
std::string bucket_csv(const MetricReport& report);

}  // namespace wgsum

#endif  // WGSUM_INFERENCE_HPP_
