#include "wgsum/experiments.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "wgsum/inference.hpp"
#include "wgsum/training.hpp"

namespace wgsum {

using namespace ad;

Var corpus_objective(const WGSumModel& model, Tape& tape, std::span<const Report> reports) {
  if (reports.empty()) throw std::invalid_argument("corpus_objective: no reports");
  std::vector<Var> per_report;
  for (const Report& r : reports) {
    TokenLoss l = report_loss(model, tape, r);
    per_report.push_back(scale(l.total, 1.0 / std::max(1, l.tokens)));
  }
  Var joined = per_report.size() == 1 ? per_report.front() : concat_cols(per_report);
  return mean(joined);
}

GradCheckResult model_grad_check(WGSumModel& model, std::span<const Report> reports,
                                 const GradCheckOptions& options) {
  const std::vector<Parameter*> params = model.parameters().all();
  model.parameters().zero_grad();
  return finite_difference_check(
      [&](Tape& tape) { return corpus_objective(model, tape, reports); }, params, options);
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

const AblationRow& AblationResult::all_edges() const {
  for (const AblationRow& r : rows) {
    if (r.edges == EdgeTypeSet::all()) return r;
  }
  throw std::logic_error("ablation result lacks the all-edges row");
}

bool AblationResult::all_edges_not_worse() const { return all_edges().median >= baseline.median; }

namespace {

double validation_rouge1(const TrainConfig& config, std::span<const Report> train,
                         std::span<const Report> valid) {
  TrainResult result = wgsum::train(config, train, valid);
  return evaluate(result.model, valid, generate_options(config)).overall.rouge1;
}

}  // namespace

AblationResult run_ablation(const TrainConfig& config, std::span<const Report> train,
                            std::span<const Report> valid) {
  if (valid.empty()) throw DataError("ablation needs a non-empty validation split");
  AblationResult result;
  result.seeds = config.ablation_seeds;

  const auto run_row = [&](AblationRow row) {
    for (std::uint64_t seed : config.ablation_seeds) {
      TrainConfig c = config;
      c.seed = seed;
      if (row.graph) {
        if (!c.model.graph_enabled()) c.model.gnn = GnnKind::Gat;
        c.model.edge_types = row.edges;
      } else {
        c.model.gnn = GnnKind::Off;
      }
      row.rouge1.push_back(validation_rouge1(c, train, valid));
    }
    row.median = median(row.rouge1);
    return row;
  };

  result.baseline = run_row({"no graph", false, EdgeTypeSet::none(), {}, 0.0});
  for (EdgeTypeSet edges : EdgeTypeSet::nonempty_subsets()) {
    result.rows.push_back(run_row({edges.to_string(), true, edges, {}, 0.0}));
  }
  return result;
}

nlohmann::json ablation_to_json(const AblationResult& result) {
  const auto row_json = [](const AblationRow& r) {
    return nlohmann::json{{"edges", r.label},
                          {"graph", r.graph},
                          {"rouge1", r.rouge1},
                          {"median_rouge1", r.median}};
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const AblationRow& r : result.rows) rows.push_back(row_json(r));
  return {{"seeds", result.seeds},
          {"baseline", row_json(result.baseline)},
          {"subsets", rows},
          {"all_edges_not_worse", result.all_edges_not_worse()}};
}

std::string ablation_table(const AblationResult& result) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(12) << "edges";
  for (std::uint64_t s : result.seeds) os << std::right << std::setw(10) << ("seed " + std::to_string(s));
  os << std::setw(10) << "median" << std::setw(10) << "delta" << "\n";
  const auto row = [&](const AblationRow& r) {
    os << std::left << std::setw(12) << r.label << std::right;
    for (double v : r.rouge1) os << std::setw(10) << v;
    os << std::setw(10) << r.median << std::setw(10) << (r.median - result.baseline.median) << "\n";
  };
  row(result.baseline);
  for (const AblationRow& r : result.rows) row(r);
  return os.str();
}

}  // namespace wgsum
