#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "model_fixtures.hpp"
#include "wgsum/synthetic.hpp"
#include "wgsum/training.hpp"

using namespace wgsum;

namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

TrainConfig tiny_training(std::uint64_t seed) {
  TrainConfig c;
  c.model = fixtures::small_lstm();
  c.epochs = 3;
  c.batch_size = 2;
  c.seed = seed;
  c.dropout = 0.1;
  c.max_decode_length = 8;
  return c;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "wgsum_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("token nll by hand") {
  Tape t;
  std::vector<Var> d{t.constant(row({0.5, 0.25, 0.25, 0.0, 0.0})), t.constant(row({0.1, 0.1, 0.1, 0.6, 0.1})),
                     t.constant(row({0.2, 0.2, 0.2, 0.2, 0.2}))};
  const std::vector<int> gold{1, 3, Vocabulary::kPad};
  const TokenLoss l = token_nll(d, gold);
  CHECK(l.tokens == 2);
  CHECK(l.total.scalar() == doctest::Approx(-std::log(0.25) - std::log(0.6)).epsilon(1e-14));
  CHECK(nll_loss(d, gold).scalar() ==
        doctest::Approx((-std::log(0.25) - std::log(0.6)) / 2).epsilon(1e-14));
  // Zero probability is clamped at the floor.
  const std::vector<int> impossible{4, Vocabulary::kPad, Vocabulary::kPad};
  CHECK(token_nll(d, impossible).total.scalar() == doctest::Approx(-std::log(1e-12)));
  const std::vector<int> pads{0, 0, 0};
  CHECK(nll_loss(d, pads).scalar() == 0.0);
  const std::vector<int> out_of_range{7, 1, 1};
  CHECK_THROWS_AS(token_nll(d, out_of_range), std::out_of_range);
  std::vector<Var> certain{t.constant(row({0, 1, 0})), t.constant(row({0, 0, 1}))};
  const std::vector<int> sure{1, 2};
  CHECK(nll_loss(certain, sure).scalar() == 0.0);
  std::vector<Var> uniform{t.constant(Matrix::Constant(1, 6, 1.0 / 6)), t.constant(Matrix::Constant(1, 6, 1.0 / 6))};
  const std::vector<int> any{4, 5};
  CHECK(nll_loss(uniform, any).scalar() == doctest::Approx(std::log(6.0)).epsilon(1e-14));
  const std::vector<int> short_gold{1};
  CHECK_THROWS(token_nll(d, short_gold));

  Tape g;
  Parameter w{"w", row({0.3, 0.7}), Matrix::Zero(1, 2)};
  std::vector<Var> dists{ad::softmax_rows(g.parameter(w))};
  const std::vector<int> one{1};
  g.backward(nll_loss(dists, one));
  const double p1 = std::exp(0.7) / (std::exp(0.3) + std::exp(0.7));
  CHECK(w.grad(0, 1) == doctest::Approx(p1 - 1.0).epsilon(1e-12));
  CHECK(w.grad(0, 0) == doctest::Approx(1.0 - p1).epsilon(1e-12));
}

TEST_CASE("checkpoint roundtrip restores the forward pass") {
  const auto corpus = synthetic_corpus(3, 8);
  const Vocabulary vocab = Vocabulary::build(corpus);
  const auto dir = scratch("ckpt");
  for (const ModelConfig& config : {fixtures::small_lstm(), fixtures::small_transformer()}) {
    WGSumModel model(config, vocab, 9);
    save_model(dir / "m.ckpt", model);
    WGSumModel loaded = load_model(dir / "m.ckpt", config);
    CHECK(loaded.vocabulary().serialize() == vocab.serialize());
    for (const auto& r : corpus) {
      Tape a(false), b(false);
      const auto x = model.teacher_forced(a, model.encode(a, r, model.graph_for(r)));
      const auto y = loaded.teacher_forced(b, loaded.encode(b, r, loaded.graph_for(r)));
      for (std::size_t k = 0; k < x.size(); ++k) CHECK(x[k].value() == y[k].value());
    }
    ModelConfig other = config;
    other.edge_types = EdgeTypeSet{true, false, false};
    CHECK_THROWS_AS(load_model(dir / "m.ckpt", other), CheckpointError);
  }
  // The last file written holds a Transformer.
  CHECK_THROWS_AS(load_model(dir / "m.ckpt", fixtures::small_lstm()), CheckpointError);

  const auto size = std::filesystem::file_size(dir / "m.ckpt");
  std::filesystem::resize_file(dir / "m.ckpt", size / 2);
  CHECK_THROWS_AS(load_model(dir / "m.ckpt"), CheckpointError);
  CHECK_THROWS(load_model(dir / "absent.ckpt"));
}

TEST_CASE("optimizer steps") {
  const auto corpus = synthetic_corpus(4, 12);
  const Vocabulary vocab = Vocabulary::build(corpus);

  TrainConfig frozen = tiny_training(1);
  frozen.learning_rate = 0.0;
  frozen.epochs = 1;
  WGSumModel model(frozen.model, vocab, 3);
  const double before = corpus_loss(model, corpus);
  Adam still(AdamConfig{0.0});
  train_model(model, still, frozen, corpus, {});
  CHECK(corpus_loss(model, corpus) == before);

  TrainConfig moving = tiny_training(1);
  moving.dropout = 0.0;
  moving.learning_rate = 5e-3;
  moving.epochs = 5;
  Adam adam(AdamConfig{moving.learning_rate});
  const TrainLog log = train_model(model, adam, moving, corpus, {});
  CHECK(corpus_loss(model, corpus) < before);
  CHECK(log.epochs.size() == 5);
  CHECK(log.best_epoch == 5);
}

TEST_CASE("seeded training is reproducible") {
  const auto train_set = synthetic_corpus(6, 4);
  const auto valid_set = synthetic_corpus(2, 5);
  const TrainConfig config = tiny_training(42);
  const auto a = train(config, train_set, valid_set, scratch("run_a"));
  const auto b = train(config, train_set, valid_set, scratch("run_b"));
  CHECK(a.log.to_jsonl() == b.log.to_jsonl());
  CHECK(a.log.epochs.size() == 3);
  CHECK(a.log.epochs[0].validation.has_value());
  CHECK(std::filesystem::exists(scratch("run_a").parent_path() / "run_a"));

  TrainConfig shifted = config;
  shifted.seed = 43;
  const auto c = train(shifted, train_set, valid_set);
  CHECK(c.log.to_jsonl() != a.log.to_jsonl());
}
