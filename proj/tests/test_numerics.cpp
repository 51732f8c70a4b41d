#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "wgsum/numerics/adam.hpp"
#include "wgsum/numerics/checkpoint.hpp"
#include "wgsum/numerics/gradcheck.hpp"
#include "wgsum/numerics/ops.hpp"

using namespace wgsum;
using namespace wgsum::ad;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

Parameter& random_param(ParameterStore& store, const std::string& name, Eigen::Index r,
                        Eigen::Index c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Parameter& p = store.add(name, r, c, Init::Zeros, rng);
  p.value = random_matrix(r, c, rng, lo, hi);
  return p;
}

// Reduces any tensor to a scalar through a fixed random projection so that
// every output coordinate contributes to the gradient.
Var project(Tape& tape, const Var& x, std::uint64_t seed = 99) {
  Rng rng(seed);
  return sum(mul(x, tape.constant(random_matrix(x.rows(), x.cols(), rng))));
}

double check(ParameterStore& store, const LossFunction& f) {
  const auto params = store.all();
  return finite_difference_check(f, params).max_relative_error;
}

}  // namespace

TEST_CASE("basic op values") {
  Tape t;
  Var z = t.constant(Matrix::Zero(1, 2));
  Matrix s = softmax_rows(z).value();
  CHECK(s(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ad::tanh(t.constant(Matrix::Zero(1, 1))).scalar() == 0.0);
  Rng rng(3);
  Matrix m = random_matrix(3, 4, rng);
  Matrix i3 = Matrix::Identity(3, 3);
  CHECK((matmul(t.constant(i3), t.constant(m)).value() - m).norm() == 0.0);
}

TEST_CASE("shape mismatch names both shapes") {
  Tape t;
  Var a = t.constant(Matrix::Zero(2, 3));
  Var b = t.constant(Matrix::Zero(2, 3));
  try {
    matmul(a, b);
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(2x3)") != std::string::npos);
    CHECK(msg.find("(2x3)", msg.find("(2x3)") + 1) != std::string::npos);
  }
  CHECK_THROWS_AS(add(t.constant(Matrix::Zero(2, 3)), t.constant(Matrix::Zero(3, 2))), ShapeError);
}

TEST_CASE("backward of x squared") {
  ParameterStore store;
  Rng rng(0);
  Parameter& x = store.add("x", 1, 1, Init::Zeros, rng);
  x.value(0, 0) = 3.0;
  Parameter& unused = store.add("unused", 2, 2, Init::Zeros, rng);
  unused.value.setOnes();
  Tape t;
  Var v = t.parameter(x);
  t.backward(mul(v, v));
  CHECK(x.grad(0, 0) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(unused.grad.norm() == 0.0);
}

TEST_CASE("backward rejects non-scalar loss") {
  Tape t;
  CHECK_THROWS_AS(t.backward(t.constant(Matrix::Zero(1, 2))), ShapeError);
}

TEST_CASE("every differentiable op matches finite differences") {
  Rng rng(17);
  ParameterStore store;
  Parameter& a = random_param(store, "a", 3, 4, rng);
  Parameter& b = random_param(store, "b", 4, 2, rng);
  Parameter& c = random_param(store, "c", 3, 4, rng);
  Parameter& r = random_param(store, "r", 1, 4, rng);
  Parameter& s = random_param(store, "s", 1, 1, rng);
  Parameter& pos = random_param(store, "pos", 3, 4, rng, 0.1, 2.0);
  Parameter& gain = random_param(store, "gain", 1, 4, rng);
  Parameter& bias = random_param(store, "bias", 1, 4, rng);
  Parameter& table = random_param(store, "table", 5, 3, rng);
  Parameter& row_param = random_param(store, "row", 1, 3, rng);

  Matrix mask = Matrix::Ones(3, 4);
  mask(0, 1) = 0.0;
  mask(2, 0) = 0.0;
  mask(2, 3) = 0.0;

  const std::vector<std::pair<std::string, LossFunction>> cases{
      {"matmul", [&](Tape& t) { return project(t, matmul(t.parameter(a), t.parameter(b))); }},
      {"matmul_nt", [&](Tape& t) { return project(t, matmul_nt(t.parameter(a), t.parameter(c))); }},
      {"transpose", [&](Tape& t) { return project(t, transpose(t.parameter(a))); }},
      {"add", [&](Tape& t) { return project(t, add(t.parameter(a), t.parameter(c))); }},
      {"add row", [&](Tape& t) { return project(t, add(t.parameter(a), t.parameter(r))); }},
      {"add scalar", [&](Tape& t) { return project(t, add(t.parameter(s), t.parameter(a))); }},
      {"sub", [&](Tape& t) { return project(t, sub(t.parameter(r), t.parameter(a))); }},
      {"mul", [&](Tape& t) { return project(t, mul(t.parameter(a), t.parameter(c))); }},
      {"mul row", [&](Tape& t) { return project(t, mul(t.parameter(r), t.parameter(a))); }},
      {"mul scalar", [&](Tape& t) { return project(t, mul(t.parameter(a), t.parameter(s))); }},
      {"affine", [&](Tape& t) { return project(t, affine(t.parameter(a), -2.0, 0.5)); }},
      {"tanh", [&](Tape& t) { return project(t, ad::tanh(t.parameter(a))); }},
      {"sigmoid", [&](Tape& t) { return project(t, sigmoid(t.parameter(a))); }},
      {"relu", [&](Tape& t) { return project(t, relu(t.parameter(a))); }},
      {"leaky_relu", [&](Tape& t) { return project(t, leaky_relu(t.parameter(a), 0.2)); }},
      {"elu", [&](Tape& t) { return project(t, elu(t.parameter(a))); }},
      {"gelu", [&](Tape& t) { return project(t, gelu(t.parameter(a))); }},
      {"exp", [&](Tape& t) { return project(t, ad::exp(t.parameter(a))); }},
      {"log", [&](Tape& t) { return project(t, log_clamped(t.parameter(pos), 1e-12)); }},
      {"softmax", [&](Tape& t) { return project(t, softmax_rows(t.parameter(a))); }},
      {"masked softmax",
       [&](Tape& t) { return project(t, masked_softmax_rows(t.parameter(a), mask)); }},
      {"concat cols",
       [&](Tape& t) { return project(t, concat_cols({t.parameter(a), t.parameter(c)})); }},
      {"concat rows",
       [&](Tape& t) { return project(t, concat_rows({t.parameter(a), t.parameter(r)})); }},
      {"slices",
       [&](Tape& t) {
         Var x = t.parameter(a);
         return add(project(t, slice_cols(x, 1, 2)), project(t, slice_rows(x, 1, 2), 5));
       }},
      {"row", [&](Tape& t) { return project(t, row(t.parameter(a), 2)); }},
      {"gather",
       [&](Tape& t) {
         const int ids[] = {4, 0, 4, 2};
         return project(t, gather_rows(t.parameter(table), ids));
       }},
      {"scatter",
       [&](Tape& t) {
         const int ids[] = {3, 0, 3};
         return project(t, scatter_cols(t.parameter(row_param), ids, 5));
       }},
      {"pick", [&](Tape& t) { return mul(pick(t.parameter(a), 1, 2), pick(t.parameter(a), 2, 3)); }},
      {"sum and mean",
       [&](Tape& t) {
         Var x = ad::tanh(t.parameter(a));
         return mul(sum(x), mean(x));
       }},
      {"mean rows", [&](Tape& t) { return project(t, mean_rows(t.parameter(a))); }},
      {"layer norm",
       [&](Tape& t) {
         return project(t, layer_norm_rows(t.parameter(a), t.parameter(gain), t.parameter(bias)));
       }},
  };
  for (const auto& [name, f] : cases) {
    CAPTURE(name);
    store.zero_grad();
    CHECK(check(store, f) <= 1e-6);
  }
}

TEST_CASE("softmax cross-entropy gradient matches finite differences") {
  Rng rng(5);
  ParameterStore store;
  Parameter& w = random_param(store, "w", 4, 6, rng);
  Parameter& x = random_param(store, "x", 2, 4, rng);
  const LossFunction f = [&](Tape& t) {
    Var p = softmax_rows(matmul(t.parameter(x), t.parameter(w)));
    return scale(add(log_clamped(pick(p, 0, 3), 1e-12), log_clamped(pick(p, 1, 5), 1e-12)), -1.0);
  };
  CHECK(check(store, f) <= 1e-4);
}

TEST_CASE("masked softmax zeroes masked entries and rejects empty rows") {
  Tape t;
  Matrix mask(1, 3);
  mask << 1, 0, 1;
  Matrix s = masked_softmax_rows(t.constant(Matrix::Zero(1, 3)), mask).value();
  CHECK(s(0, 1) == 0.0);
  CHECK(s(0, 0) == doctest::Approx(0.5));
  CHECK_THROWS(masked_softmax_rows(t.constant(Matrix::Zero(1, 3)), Matrix::Zero(1, 3)));
}

TEST_CASE("dropout is inverted and its mask is constant") {
  Rng rng(1);
  Tape t;
  Matrix ones = Matrix::Ones(50, 40);
  Matrix d = dropout(t.constant(ones), 0.5, rng).value();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double v = d.data()[i];
    CHECK((v == 0.0 || v == 2.0));
  }
  CHECK(d.mean() == doctest::Approx(1.0).epsilon(0.1));
  Matrix same = dropout(t.constant(ones), 0.0, rng).value();
  CHECK(same == ones);
}

TEST_CASE("adam first step by hand") {
  ParameterStore store;
  Rng rng(0);
  Parameter& p = store.add("p", 1, 1, Init::Zeros, rng);
  p.value(0, 0) = 0.5;
  p.grad(0, 0) = 1.0;
  Adam adam(AdamConfig{1e-3});
  adam.step(store);
  // m = 0.1, v = 0.001, m_hat = 1, v_hat = 1.
  const double expected = 0.5 - 1e-3 * 1.0 / (1.0 + 1e-8);
  CHECK(p.value(0, 0) == doctest::Approx(expected).epsilon(1e-15));

  // Second step with g = -2: m = 0.09 - 0.2 = -0.11, v = 0.000999 + 0.004 = 0.004999.
  p.grad(0, 0) = -2.0;
  const double before = p.value(0, 0);
  adam.step(store);
  const double m_hat = -0.11 / (1.0 - 0.81);
  const double v_hat = 0.004999 / (1.0 - 0.999 * 0.999);
  CHECK(p.value(0, 0) ==
        doctest::Approx(before - 1e-3 * m_hat / (std::sqrt(v_hat) + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam leaves zero-gradient parameters unchanged and is deterministic") {
  const auto run = [] {
    ParameterStore store;
    Rng rng(4);
    Parameter& p = store.add("p", 3, 3, Init::XavierUniform, rng);
    Adam adam;
    for (int i = 0; i < 5; ++i) {
      p.grad = p.value * 0.3;
      p.grad(0, 0) = 0.0;
      adam.step(store);
    }
    return p.value;
  };
  ParameterStore store;
  Rng rng(4);
  Parameter& fresh = store.add("p", 3, 3, Init::XavierUniform, rng);
  const Matrix a = run();
  const Matrix b = run();
  CHECK(a == b);
  CHECK(a(0, 0) == fresh.value(0, 0));
  CHECK(a(1, 1) != fresh.value(1, 1));
}

TEST_CASE("finite difference check basics") {
  ParameterStore store;
  Rng rng(2);
  Parameter& x = random_param(store, "x", 2, 3, rng);
  const LossFunction linear = [&](Tape& t) { return project(t, t.parameter(x)); };
  const auto params = store.all();
  CHECK(finite_difference_check(linear, params).max_relative_error <= 1e-10);
  GradCheckOptions bad;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(finite_difference_check(linear, params, bad), std::invalid_argument);

  // A wrong gradient is detected.
  const LossFunction broken = [&](Tape& t) {
    Var v = t.parameter(x);
    Matrix doubled = v.value() * v.value().transpose();
    return t.record(Matrix::Constant(1, 1, doubled.trace()), {v},
                    [v](Tape& tp, const Matrix& g) { tp.grad_of(v) += g(0, 0) * v.value(); });
  };
  CHECK(finite_difference_check(broken, params).max_relative_error > 0.1);
}

TEST_CASE("checkpoint round trip is bit exact and detects corruption") {
  ParameterStore store;
  Rng rng(8);
  store.add("w", 3, 5, Init::XavierUniform, rng);
  store.add("e", 4, 2, Init::Uniform, rng);
  Adam adam;
  for (auto* p : store.all()) p->grad.setConstant(0.25);
  adam.step(store);

  Checkpoint ck;
  ck.config_hash = 0x1234;
  ck.metadata = {{"k", "v"}};
  ck.parameters = snapshot_parameters(store);
  ck.optimizer = adam.state();
  const auto path = std::filesystem::temp_directory_path() / "wgsum_test.ckpt";
  write_checkpoint(path, ck);
  const Checkpoint back = read_checkpoint(path);
  CHECK(back.config_hash == 0x1234);
  REQUIRE(back.find_metadata("k") != nullptr);
  CHECK(*back.find_metadata("k") == "v");
  REQUIRE(back.parameters.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.parameters[i].name == ck.parameters[i].name);
    CHECK(std::memcmp(back.parameters[i].value.data(), ck.parameters[i].value.data(),
                      sizeof(double) * ck.parameters[i].value.size()) == 0);
  }
  REQUIRE(back.optimizer.has_value());
  CHECK(back.optimizer->step == 1);
  CHECK(back.optimizer->first_moment[0] == ck.optimizer->first_moment[0]);

  ParameterStore other;
  Rng rng2(9);
  other.add("w", 3, 5, Init::XavierUniform, rng2);
  other.add("e", 4, 2, Init::Uniform, rng2);
  restore_parameters(back, other);
  CHECK(other.get("w").value == store.get("w").value);

  ParameterStore wrong;
  wrong.add("w", 5, 3, Init::Zeros, rng2);
  wrong.add("e", 4, 2, Init::Zeros, rng2);
  CHECK_THROWS_AS(restore_parameters(back, wrong), CheckpointError);

  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 5);
  CHECK_THROWS_AS(read_checkpoint(path), CheckpointError);

  write_checkpoint(path, ck);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    f.put('\x7f');
  }
  CHECK_THROWS_AS(read_checkpoint(path), CheckpointError);
  std::filesystem::remove(path);
}
