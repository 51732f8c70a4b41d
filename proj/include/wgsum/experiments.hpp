#ifndef WGSUM_EXPERIMENTS_HPP_
#define WGSUM_EXPERIMENTS_HPP_

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wgsum/config.hpp"
#include "wgsum/model.hpp"
#include "wgsum/numerics/gradcheck.hpp"

namespace wgsum {

/// Mean over `reports` of the per-report mean token NLL, without dropout.
Var corpus_objective(const WGSumModel& model, Tape& tape, std::span<const Report> reports);

GradCheckResult model_grad_check(WGSumModel& model, std::span<const Report> reports,
                                 const GradCheckOptions& options);

struct AblationRow {
  std::string label;
  bool graph = true;
  EdgeTypeSet edges;
  std::vector<double> rouge1;  // validation ROUGE-1 per seed
  double median = 0.0;
};

struct AblationResult {
  std::vector<std::uint64_t> seeds;
  AblationRow baseline;           // graph off
  std::vector<AblationRow> rows;  // the 7 non-empty edge subsets
  const AblationRow& all_edges() const;
  /// All-edges median R-1 at least the graph-off median.
  bool all_edges_not_worse() const;
};

double median(std::vector<double> values);

/// Trains one graph-off model and one model per non-empty edge subset for
/// each seed in config.ablation_seeds and scores them on `valid`.
AblationResult run_ablation(const TrainConfig& config, std::span<const Report> train,
                            std::span<const Report> valid);

nlohmann::json ablation_to_json(const AblationResult& result);
std::string ablation_table(const AblationResult& result);

}  // namespace wgsum

#endif  // WGSUM_EXPERIMENTS_HPP_
