#include "wgsum/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wgsum/config.hpp"
#include "wgsum/corpus.hpp"
#include "wgsum/experiments.hpp"
#include "wgsum/inference.hpp"
#include "wgsum/numerics/checkpoint.hpp"
#include "wgsum/training.hpp"
#include "wgsum/wordgraph.hpp"

namespace wgsum {
namespace {

namespace fs = std::filesystem;

class MissingFile : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> edge_types;
  std::optional<std::string> variant;
  std::optional<std::string> gnn;
  std::optional<std::string> copy;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
  std::vector<std::string> inputs;
  std::string checkpoint;
  std::size_t coords = 20;
  std::size_t reports = 3;
  double tolerance = 1e-4;
};

void add_common(CLI::App& cmd, Options& o) {
  cmd.add_option("--config", o.config_path, "configuration file (key = value lines)");
  cmd.add_option("--seed", o.seed, "random seed");
  cmd.add_option("--edge-types", o.edge_types, "edge families, e.g. I,II,III or none");
  cmd.add_option("--variant", o.variant, "lstm | transformer");
  cmd.add_option("--gnn", o.gnn, "gcn | gat | off");
  cmd.add_option("--copy", o.copy, "on | off");
  cmd.add_option("--out", o.out, "output directory");
  cmd.add_option("--set", o.overrides, "extra KEY=VALUE config override (repeatable)")
      ->allow_extra_args(false);
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw MissingFile("file not found: " + path);
}

TrainConfig resolve_config(const Options& o) {
  TrainConfig c;
  if (!o.config_path.empty()) {
    require_file(o.config_path);
    c = load_config(o.config_path);
  }
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) set_config_value(c, "seed", std::to_string(*o.seed));
  if (o.edge_types) set_config_value(c, "edge_types", *o.edge_types);
  if (o.variant) set_config_value(c, "variant", *o.variant);
  if (o.gnn) set_config_value(c, "gnn", *o.gnn);
  if (o.copy) set_config_value(c, "copy", *o.copy);
  c.validate();
  return c;
}

std::vector<Report> load(const std::string& path) {
  require_file(path);
  return load_corpus(path);
}

std::string pick_path(const std::vector<std::string>& inputs, std::size_t i,
                      const std::string& fallback, const std::string& what) {
  if (i < inputs.size()) return inputs[i];
  if (fallback.empty()) throw ConfigError("no " + what + " corpus given (argument or config key)");
  return fallback;
}

fs::path out_dir(const Options& o, const std::string& fallback) {
  fs::path dir = o.out ? fs::path(*o.out) : fs::path(fallback);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

int cmd_build_graphs(const Options& o, std::ostream& out) {
  const TrainConfig c = resolve_config(o);
  std::vector<std::string> paths = o.inputs;
  if (paths.empty()) paths.push_back(pick_path({}, 0, c.train_path, "input"));
  const fs::path dir = out_dir(o, ".");
  std::string lines;
  std::size_t count = 0;
  for (const std::string& p : paths) {
    for (const Report& r : load(p)) {
      lines += graph_to_json(r.id, build_graph(r, c.model.edge_types)).dump() + "\n";
      ++count;
    }
  }
  write_file(dir / "graphs.jsonl", lines);
  out << "wrote " << count << " graphs to " << (dir / "graphs.jsonl").string() << "\n";
  return kExitOk;
}

int cmd_stats(const Options& o, std::ostream& out) {
  const TrainConfig c = resolve_config(o);
  std::vector<std::pair<std::string, std::string>> splits;
  if (!o.inputs.empty()) {
    for (const std::string& p : o.inputs) splits.emplace_back(fs::path(p).stem().string(), p);
  } else {
    if (!c.train_path.empty()) splits.emplace_back("train", c.train_path);
    if (!c.valid_path.empty()) splits.emplace_back("valid", c.valid_path);
    if (!c.test_path.empty()) splits.emplace_back("test", c.test_path);
  }
  if (splits.empty()) throw ConfigError("stats: no corpus given (argument or config key)");

  nlohmann::json j = nlohmann::json::array();
  std::ostringstream table;
  table << std::fixed << std::setprecision(2) << std::left << std::setw(12) << "split"
        << std::right << std::setw(8) << "reports" << std::setw(8) << "Afl" << std::setw(8)
        << "Afs" << std::setw(8) << "Afe" << std::setw(8) << "Ail" << std::setw(8) << "Ais"
        << "\n";
  for (const auto& [name, path] : splits) {
    const std::vector<Report> kept = prepare_split(load(path), c);
    const SplitStats s = graph_stats(kept, c.model.edge_types);
    table << std::left << std::setw(12) << name << std::right << std::setw(8) << s.report_count
          << std::setw(8) << s.avg_findings_length << std::setw(8) << s.avg_findings_sentences
          << std::setw(8) << s.avg_findings_edges << std::setw(8) << s.avg_impression_length
          << std::setw(8) << s.avg_impression_sentences << "\n";
    j.push_back({{"split", name},
                 {"reports", s.report_count},
                 {"Afl", s.avg_findings_length},
                 {"Afs", s.avg_findings_sentences},
                 {"Afe", s.avg_findings_edges},
                 {"Ail", s.avg_impression_length},
                 {"Ais", s.avg_impression_sentences}});
  }
  out << table.str();
  if (o.out) write_file(out_dir(o, ".") / "stats.json", j.dump(2) + "\n");
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const TrainConfig c = resolve_config(o);
  const auto train_set = prepare_split(load(pick_path(o.inputs, 0, c.train_path, "training")), c);
  std::vector<Report> valid_set;
  const std::string valid_path = o.inputs.size() > 1 ? o.inputs[1] : c.valid_path;
  if (!valid_path.empty()) valid_set = prepare_split(load(valid_path), c);
  const fs::path dir = out_dir(o, "run");
  write_file(dir / "config.txt", to_text(c));
  TrainResult result = train(c, train_set, valid_set, dir);
  const EpochRecord& best = result.log.epochs[static_cast<std::size_t>(result.log.best_epoch - 1)];
  out << "trained " << c.epochs << " epochs on " << train_set.size() << " reports; best epoch "
      << result.log.best_epoch << " (train loss " << best.train_loss;
  if (best.validation) out << ", valid R-1 " << best.validation->rouge1;
  out << ")\ncheckpoint: " << (dir / "best.ckpt").string() << "\n";
  return kExitOk;
}

WGSumModel load_checkpoint(const Options& o) {
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  require_file(o.checkpoint);
  return load_model(o.checkpoint);
}

int cmd_generate(const Options& o, std::ostream& out) {
  const TrainConfig c = resolve_config(o);
  const WGSumModel model = load_checkpoint(o);
  const auto reports = prepare_split(load(pick_path(o.inputs, 0, c.test_path, "input")), c);
  std::string lines;
  for (const Report& r : reports) {
    const Generation g = generate(model, r, generate_options(c));
    std::string text;
    for (const auto& t : g.tokens) text += (text.empty() ? "" : " ") + t;
    lines += nlohmann::json{{"id", r.id}, {"impression", text}}.dump() + "\n";
  }
  if (o.out) {
    const fs::path path = out_dir(o, ".") / "generations.jsonl";
    write_file(path, lines);
    out << "wrote " << reports.size() << " impressions to " << path.string() << "\n";
  } else {
    out << lines;
  }
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const TrainConfig c = resolve_config(o);
  const WGSumModel model = load_checkpoint(o);
  const auto reports = prepare_split(load(pick_path(o.inputs, 0, c.test_path, "test")), c);
  const MetricReport report = evaluate(model, reports, generate_options(c));
  out << metrics_table(report);
  if (o.out) {
    const fs::path dir = out_dir(o, ".");
    write_file(dir / "metrics.json", metrics_to_json(report).dump(2) + "\n");
    write_file(dir / "metrics.txt", metrics_table(report));
    write_file(dir / "buckets.csv", bucket_csv(report));
  }
  return kExitOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  const TrainConfig c = resolve_config(o);
  const auto train_set = prepare_split(load(pick_path(o.inputs, 0, c.train_path, "training")), c);
  const auto valid_set =
      prepare_split(load(pick_path(o.inputs, 1, c.valid_path, "validation")), c);
  const AblationResult result = run_ablation(c, train_set, valid_set);
  out << ablation_table(result);
  out << "all edges vs no graph (median R-1): " << result.all_edges().median << " vs "
      << result.baseline.median << (result.all_edges_not_worse() ? " (not worse)" : " (worse)")
      << "\n";
  const fs::path dir = out_dir(o, "ablation");
  write_file(dir / "ablation.json", ablation_to_json(result).dump(2) + "\n");
  write_file(dir / "ablation.txt", ablation_table(result));
  return kExitOk;
}

int cmd_grad_check(const Options& o, std::ostream& out) {
  const TrainConfig c = resolve_config(o);
  auto reports = prepare_split(load(pick_path(o.inputs, 0, c.train_path, "input")), c);
  if (reports.empty()) throw DataError("grad-check: corpus is empty after filtering");
  if (reports.size() > o.reports) reports.resize(o.reports);
  WGSumModel model(c.model, Vocabulary::build(reports, c.min_count), c.seed);
  GradCheckOptions options;
  options.max_coords_per_param = o.coords;
  options.seed = c.seed;
  const auto start = std::chrono::steady_clock::now();
  const GradCheckResult r = model_grad_check(model, reports, options);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = r.max_relative_error <= o.tolerance;
  out << to_string(c.model.variant) << "+" << to_string(c.model.gnn) << ": max relative error "
      << std::scientific << std::setprecision(3) << r.max_relative_error << " over "
      << r.coordinates_checked << " coordinates (worst " << r.worst_parameter << "["
      << r.worst_index << "]) in " << std::fixed << std::setprecision(1) << seconds << " s: "
      << (ok ? "ok" : "FAILED") << "\n";
  if (!ok) {
    throw NumericalFailure("gradient check exceeded tolerance " + std::to_string(o.tolerance));
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Word-graph-guided radiology impression summarizer", "wgsum"};
  app.require_subcommand(1, 1);
  Options o;

  auto* build = app.add_subcommand("build-graphs", "write word graphs of a corpus as JSONL");
  auto* stats = app.add_subcommand("stats", "corpus and graph statistics per split");
  auto* train_cmd = app.add_subcommand("train", "train a model");
  auto* gen = app.add_subcommand("generate", "decode impressions with a checkpoint");
  auto* eval = app.add_subcommand("evaluate", "ROUGE evaluation of a checkpoint");
  auto* ablate = app.add_subcommand("ablate-edges", "edge-type ablation over the 7 subsets");
  auto* grad = app.add_subcommand("grad-check", "finite-difference gradient check");
  for (CLI::App* cmd : {build, stats, train_cmd, gen, eval, ablate, grad}) {
    add_common(*cmd, o);
    cmd->add_option("inputs", o.inputs, "corpus JSONL files");
  }
  for (CLI::App* cmd : {gen, eval}) {
    cmd->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();
  }
  grad->add_option("--coords", o.coords, "coordinates sampled per parameter (0 = all)");
  grad->add_option("--reports", o.reports, "number of reports in the objective");
  grad->add_option("--tolerance", o.tolerance, "maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (build->parsed()) return cmd_build_graphs(o, out);
    if (stats->parsed()) return cmd_stats(o, out);
    if (train_cmd->parsed()) return cmd_train(o, out);
    if (gen->parsed()) return cmd_generate(o, out);
    if (eval->parsed()) return cmd_evaluate(o, out);
    if (ablate->parsed()) return cmd_ablate(o, out);
    if (grad->parsed()) return cmd_grad_check(o, out);
  } catch (const MissingFile& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalFailure& e) {
    err << "numerical check failed: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace wgsum
