#include <doctest.h>

#include <vector>

#include "model_fixtures.hpp"
#include "pg_reference.hpp"
#include "wgsum/model.hpp"
#include "wgsum/synthetic.hpp"

using namespace wgsum;

namespace {

std::vector<Var> forward(const WGSumModel& model, Tape& tape, const Report& r) {
  EncodedReport enc = model.encode(tape, r, model.graph_for(r));
  return model.teacher_forced(tape, enc);
}

std::vector<int> decoder_inputs(const CopyEncoding& enc) {
  std::vector<int> in{Vocabulary::kBos};
  in.insert(in.end(), enc.target_ids.begin(), enc.target_ids.end() - 1);
  return in;
}

double max_reference_gap(const ModelConfig& config, std::uint64_t seed, const Report& r,
                         const Vocabulary& vocab) {
  WGSumModel model(config, vocab, seed);
  Tape tape(false);
  const std::vector<Var> dists = forward(model, tape, r);
  const CopyEncoding enc = encode_with_copy(r, vocab, config.copy);
  reference::PointerGenerator ref(model.parameters(), config.variant == Variant::Transformer,
                                  config.heads, config.copy);
  const auto expected = ref.run(enc, vocab.size(), decoder_inputs(enc));
  REQUIRE(expected.size() == dists.size());
  double gap = 0.0;
  for (std::size_t t = 0; t < dists.size(); ++t) {
    REQUIRE(dists[t].cols() == expected[t].cols());
    gap = std::max(gap, (dists[t].value() - expected[t]).cwiseAbs().maxCoeff());
  }
  return gap;
}

}  // namespace

TEST_CASE("graph-off model matches the plain pointer-generator") {
  const auto corpus = synthetic_corpus(6, 21);
  // Vocabulary from two reports only, so later reports carry copyable OOVs.
  const Vocabulary vocab = Vocabulary::build(std::span(corpus).first(2));
  for (bool copy : {true, false}) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      CHECK(max_reference_gap(fixtures::small_lstm(GnnKind::Off, copy), 100 + i, corpus[i], vocab) <=
            1e-12);
      CHECK(max_reference_gap(fixtures::small_transformer(GnnKind::Off, copy), 200 + i, corpus[i],
                              vocab) <= 1e-12);
    }
  }
}

TEST_CASE("empty graph with transplanted weights reduces to the baseline") {
  const auto corpus = synthetic_corpus(4, 5);
  const Vocabulary vocab = Vocabulary::build(corpus);
  for (const bool transformer : {false, true}) {
    for (const GnnKind gnn : {GnnKind::Gat, GnnKind::Gcn}) {
      const ModelConfig off = transformer ? fixtures::small_transformer(GnnKind::Off)
                                          : fixtures::small_lstm(GnnKind::Off);
      const ModelConfig on = transformer ? fixtures::small_transformer(gnn) : fixtures::small_lstm(gnn);
      WGSumModel base(off, vocab, 3);
      WGSumModel graph(on, vocab, 4);
      fixtures::transplant_baseline(base, graph);
      for (const auto& r : corpus) {
        const Report bare = fixtures::without_annotations(r);
        CHECK(graph.graph_for(bare).empty());
        Tape t1(false), t2(false);
        const auto a = forward(base, t1, bare);
        const auto b = forward(graph, t2, bare);
        for (std::size_t k = 0; k < a.size(); ++k) {
          CHECK((a[k].value() - b[k].value()).cwiseAbs().maxCoeff() <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("decode steps are normalized and the background is fixed") {
  const Report fig = figure_example();
  const auto corpus = synthetic_corpus(4, 9);
  Vocabulary vocab = Vocabulary::build(corpus);
  for (const ModelConfig& config :
       {fixtures::small_lstm(), fixtures::small_transformer(), fixtures::small_lstm(GnnKind::Gcn),
        fixtures::small_transformer(GnnKind::Gat, false)}) {
    WGSumModel model(config, vocab, 11);
    Tape tape(false);
    const EncodedReport enc = model.encode(tape, fig, model.graph_for(fig));
    CHECK_FALSE(enc.graph.empty);
    CHECK_FALSE(enc.background.empty);
    DecoderState state = model.initial_state(tape, enc);
    int previous = Vocabulary::kBos;
    for (int gold : enc.encoding.target_ids) {
      StepOutput out = model.step(tape, enc, state, previous);
      CHECK(out.distribution.value().sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(out.distribution.value().minCoeff() >= 0.0);
      CHECK(out.copy_attention.value().sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(out.guidance_weights.value().sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(out.guidance_weights.cols() == static_cast<Eigen::Index>(model.graph_for(fig).nodes.size()));
      const Eigen::Index g = config.graph_dim();
      CHECK(out.expanded_input.value().rightCols(g) == enc.background.vector.value());
      CHECK((out.state.value() - out.pre_state.value()).norm() > 0.0);
      if (config.copy) {
        CHECK(out.p_gen.scalar() > 0.0);
        CHECK(out.p_gen.scalar() < 1.0);
        CHECK(out.distribution.cols() == enc.encoding.extended_size);
      } else {
        CHECK_FALSE(out.p_gen.valid());
        CHECK(out.distribution.cols() == vocab.size());
      }
      state = out.next;
      previous = gold;
    }
  }
}

TEST_CASE("model construction and determinism") {
  const auto corpus = synthetic_corpus(3, 2);
  const Vocabulary vocab = Vocabulary::build(corpus);
  WGSumModel a(fixtures::small_lstm(), vocab, 5);
  WGSumModel b(fixtures::small_lstm(), vocab, 5);
  WGSumModel c(fixtures::small_lstm(), vocab, 6);
  REQUIRE(a.parameters().size() == b.parameters().size());
  bool differs = false;
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters()[i].value == b.parameters()[i].value);
    if (a.parameters()[i].value != c.parameters()[i].value) differs = true;
  }
  CHECK(differs);
  CHECK(a.parameters().get("embedding").value.rows() == vocab.size());
  CHECK(a.parameters().get("decoder.lstm.Wx").value.rows() == 6 + 4);
  CHECK_FALSE(WGSumModel(fixtures::small_lstm(GnnKind::Off), vocab, 5).parameters().contains("graph.background.l0.W"));
  CHECK_FALSE(WGSumModel(fixtures::small_lstm(GnnKind::Gat, false), vocab, 5).parameters().contains("decoder.pgen.W"));

  Tape t1(false), t2(false);
  const auto x = forward(a, t1, corpus[0]);
  const auto y = forward(b, t2, corpus[0]);
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(x[k].value() == y[k].value());

  Report empty = corpus[0];
  empty.findings.clear();
  empty.entities.clear();
  empty.deps.clear();
  Tape t3(false);
  CHECK_THROWS(a.encode(t3, empty, a.graph_for(empty)));

  ModelConfig bad = fixtures::small_transformer();
  bad.heads = 3;
  CHECK_THROWS(WGSumModel(bad, vocab, 1));
}
