// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
// gated criterion fails. Soft expectations print SOFT lines and never fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "model_fixtures.hpp"
#include "oracles.hpp"
#include "pg_reference.hpp"
#include "rouge_cases.hpp"
#include "wgsum/experiments.hpp"
#include "wgsum/inference.hpp"
#include "wgsum/synthetic.hpp"
#include "wgsum/training.hpp"

using namespace wgsum;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// 1 -------------------------------------------------------------------------

void gradient_check() {
  const auto start = Clock::now();
  const auto fixture = synthetic_corpus(3, 31, "grad");
  const Vocabulary vocab = Vocabulary::build(fixture);
  GradCheckOptions options;
  options.epsilon = 1e-5;
  options.max_coords_per_param = 0;  // every coordinate
  double worst = 0.0;
  std::size_t coords = 0;
  std::string where;
  for (const ModelConfig& config : {fixtures::small_lstm(), fixtures::small_transformer()}) {
    WGSumModel model(config, vocab, 77);
    const GradCheckResult r = model_grad_check(model, fixture, options);
    coords += r.coordinates_checked;
    if (r.max_relative_error >= worst) {
      worst = r.max_relative_error;
      where = to_string(config.variant) + " " + r.worst_parameter;
    }
  }
  const double secs = seconds_since(start);
  report(1, "gradient check", worst <= 1e-4 && secs < 300.0,
         fmt("max relative error %.3g over %.0f coordinates in %.1f s", worst,
             static_cast<double>(coords), secs) +
             " (worst at " + where + ")");
}

// 2 -------------------------------------------------------------------------

void normalization() {
  std::mt19937_64 rng(5);
  const auto corpus = synthetic_corpus(40, 41);
  const Vocabulary vocab = Vocabulary::build(std::span(corpus).first(10));
  double attention_gap = 0.0;
  double mixture_gap = 0.0;
  double negative = 0.0;
  std::size_t vectors = 0;
  const auto check_attention = [&](const Var& v) {
    if (!v.valid()) return;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      attention_gap = std::max(attention_gap, std::abs(v.value().row(r).sum() - 1.0));
      negative = std::min(negative, v.value().row(r).minCoeff());
      ++vectors;
    }
  };
  std::uniform_real_distribution<double> spread(0.3, 4.0);
  for (int draw = 0; draw < 1000; ++draw) {
    const bool transformer = draw % 2 == 1;
    const GnnKind gnn = (draw / 2) % 2 == 0 ? GnnKind::Gat : GnnKind::Gcn;
    ModelConfig config = transformer ? fixtures::small_transformer(gnn) : fixtures::small_lstm(gnn);
    config.scale_guidance = draw % 3 == 0;
    WGSumModel model(config, vocab, 1000 + static_cast<std::uint64_t>(draw));
    const double s = spread(rng);
    for (Parameter* p : model.parameters().all()) p->value *= s;
    const Report& r = corpus[static_cast<std::size_t>(draw) % corpus.size()];

    Tape tape(false);
    const EncodedReport enc = model.encode(tape, r, model.graph_for(r));
    check_attention(enc.background.weights);
    DecoderState state = model.initial_state(tape, enc);
    int previous = Vocabulary::kBos;
    const std::size_t steps = std::min<std::size_t>(4, enc.encoding.target_ids.size());
    for (std::size_t t = 0; t < steps; ++t) {
      StepOutput out = model.step(tape, enc, state, previous);
      check_attention(out.copy_attention);
      check_attention(out.guidance_weights);
      mixture_gap = std::max(mixture_gap, std::abs(out.distribution.value().sum() - 1.0));
      negative = std::min(negative, out.distribution.value().minCoeff());
      state = out.next;
      previous = enc.encoding.target_ids[t];
    }

    // Graph attention coefficients of a random layer over the same graph.
    const WordGraph g = model.graph_for(r);
    if (!g.empty()) {
      ParameterStore store;
      Rng layer_rng(static_cast<std::uint64_t>(draw));
      GatLayer layer(store, "gat", 3, 4, 0.2, layer_rng);
      layer.weight().value *= s;
      Tape t2(false);
      Matrix x = Matrix::Random(g.size(), 3) * s;
      check_attention(
          layer.attention(t2, ad::matmul(t2.constant(x), t2.parameter(layer.weight())), g.adjacency));
    }
  }
  const bool ok = attention_gap <= 1e-9 && mixture_gap <= 1e-6 && negative >= 0.0;
  report(2, "normalization", ok,
         fmt("%.0f attention vectors, max |sum-1| %.2g; max mixture |sum-1| %.2g",
             static_cast<double>(vectors), attention_gap, mixture_gap));
}

// 3 -------------------------------------------------------------------------

void baseline_equivalence() {
  const auto corpus = synthetic_corpus(100, 51);
  const Vocabulary vocab = Vocabulary::build(std::span(corpus).first(20));
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const bool transformer = i % 2 == 1;
    const bool copy = (i / 2) % 4 != 3;
    const ModelConfig config = transformer ? fixtures::small_transformer(GnnKind::Off, copy)
                                           : fixtures::small_lstm(GnnKind::Off, copy);
    const Report& r = corpus[static_cast<std::size_t>(i)];
    WGSumModel model(config, vocab, 500 + static_cast<std::uint64_t>(i));
    Tape tape(false);
    const auto dists = model.teacher_forced(tape, model.encode(tape, r, model.graph_for(r)));
    const CopyEncoding enc = encode_with_copy(r, vocab, copy);
    std::vector<int> inputs{Vocabulary::kBos};
    inputs.insert(inputs.end(), enc.target_ids.begin(), enc.target_ids.end() - 1);
    const auto expected = reference::PointerGenerator(model.parameters(), transformer, config.heads, copy)
                              .run(enc, vocab.size(), inputs);
    for (std::size_t t = 0; t < dists.size(); ++t) {
      if (dists[t].cols() != expected[t].cols()) {
        worst = INFINITY;
        continue;
      }
      worst = std::max(worst, (dists[t].value() - expected[t]).cwiseAbs().maxCoeff());
    }
  }
  report(3, "graph-off equals plain pointer-generator", worst <= 1e-12,
         fmt("max abs difference %.3g over 100 cases", worst));
}

// 4 -------------------------------------------------------------------------

void word_graph() {
  const Report fig = figure_example();
  const WordGraph g = build_graph(fig);
  const auto edges = oracle::graph_word_edges(g);
  bool fig_ok = edges.count(oracle::word_edge("endotracheal", "tube", 1)) == 1 &&
                edges.count(oracle::word_edge("moderate", "effusion", 2)) == 1 &&
                edges.count(oracle::word_edge("effusion", "left", 3)) == 1;
  int effusion = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (g.nodes[i] == "effusion") {
      ++effusion;
      fig_ok = fig_ok && g.occurrences[i] == std::vector<int>{13, 16};
    }
  }
  fig_ok = fig_ok && effusion == 1;

  std::mt19937_64 rng(2024);
  int agree = 0;
  for (int i = 0; i < 200; ++i) {
    const Report r = oracle::random_annotated(rng, i);
    if (oracle::graph_word_edges(build_graph(r)) == oracle::brute_force_edges(r, true, true, true)) ++agree;
  }
  report(4, "word graph construction", fig_ok && agree == 200,
         std::string("figure edges and node dedup ") + (fig_ok ? "ok" : "wrong") +
             fmt("; brute force agrees on %.0f/200 findings", agree));
}

// 5 -------------------------------------------------------------------------

void rouge() {
  const int matching = rouge_cases::hand_cases_matching(1e-9);
  const int violations = rouge_cases::metamorphic_violations(2000, 17);
  report(5, "ROUGE", matching == 25 && violations == 0,
         fmt("%.0f/25 hand cases within 1e-9; %.0f metamorphic violations over 2000 pairs", matching,
             violations));
}

// 6 -------------------------------------------------------------------------

int exact_regenerations(const WGSumModel& model, std::span<const Report> reports) {
  int exact = 0;
  for (const Report& r : reports) {
    if (generate(model, r, GenerateOptions{DecodeMode::Greedy, 50, 1}).tokens == r.impression) ++exact;
  }
  return exact;
}

void overfit() {
  const auto start = Clock::now();
  const auto corpus = synthetic_corpus(32, 7, "train");
  TrainConfig config;  // full-size LSTM + GAT
  config.dropout = 0.0;
  config.batch_size = 8;
  config.learning_rate = 1e-3;
  WGSumModel model(config.model, Vocabulary::build(corpus), 1);
  Adam adam(AdamConfig{config.learning_rate});
  const int chunk = 10;
  int epochs = 0;
  double loss = INFINITY;
  int exact = 0;
  while (epochs < 200) {
    TrainConfig c = config;
    c.epochs = chunk;
    c.seed = config.seed + static_cast<std::uint64_t>(epochs);
    train_model(model, adam, c, corpus, {});
    epochs += chunk;
    loss = corpus_loss(model, corpus);
    if (loss < 0.1) {
      exact = exact_regenerations(model, corpus);
      if (exact >= 29) break;  // 90% of 32, rounded up
    }
  }
  const double secs = seconds_since(start);
  report(6, "overfit 32 synthetic pairs", loss < 0.1 && exact >= 29 && secs < 600.0,
         fmt("NLL %.4f, exact greedy %.0f/32", loss, exact) +
             fmt(" after %.0f epochs in %.1f s", epochs, secs));
}

// 7 -------------------------------------------------------------------------

void ablation() {
  const auto start = Clock::now();
  const auto train_set = synthetic_corpus(32, 7, "train");
  const auto valid_set = synthetic_corpus(16, 11, "valid");
  TrainConfig config;
  config.model = fixtures::small_lstm();
  config.model.embedding_dim = 16;
  config.model.encoder_hidden = 16;
  config.model.encoder_layers = 1;
  config.model.decoder_hidden = 24;
  config.model.graph_hidden = 16;
  config.epochs = 12;
  config.learning_rate = 5e-3;
  config.dropout = 0.1;
  config.max_decode_length = 30;
  config.ablation_seeds = {1, 2, 3};
  const AblationResult result = run_ablation(config, train_set, valid_set);

  bool distinct = result.rows.size() == 7;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    distinct = distinct && result.rows[i].rouge1.size() == 3;
    for (std::size_t j = 0; j < i; ++j) distinct = distinct && !(result.rows[i].edges == result.rows[j].edges);
  }
  std::cout << ablation_table(result);
  report(7, "edge-type ablation table", distinct && !result.baseline.graph,
         fmt("7 subsets x 3 seeds plus no-graph baseline in %.1f s", seconds_since(start)));
  std::cout << "SOFT [7] all-edges median R-1 " << result.all_edges().median << " vs no-graph "
            << result.baseline.median << ": " << (result.all_edges_not_worse() ? "met" : "not met")
            << " (informational)" << std::endl;
}

// 8 -------------------------------------------------------------------------

void determinism() {
  const auto train_set = synthetic_corpus(8, 3);
  const auto valid_set = synthetic_corpus(4, 4);
  TrainConfig config;
  config.model = fixtures::small_lstm();
  config.epochs = 3;
  config.batch_size = 3;
  config.seed = 1234;
  config.max_decode_length = 10;
  std::vector<std::string> logs, metrics;
  for (int run = 0; run < 2; ++run) {
    TrainResult r = train(config, train_set, valid_set);
    logs.push_back(r.log.to_jsonl());
    metrics.push_back(metrics_to_json(evaluate(r.model, valid_set, generate_options(config))).dump(2));
  }
  report(8, "seeded determinism", logs[0] == logs[1] && metrics[0] == metrics[1],
         std::string("TrainLog ") + (logs[0] == logs[1] ? "identical" : "differs") + ", metrics " +
             (metrics[0] == metrics[1] ? "identical" : "differs"));
}

}  // namespace

int main() {
  gradient_check();
  normalization();
  baseline_equivalence();
  word_graph();
  rouge();
  overfit();
  ablation();
  determinism();
  std::cout << (failures == 0 ? "all gated criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
