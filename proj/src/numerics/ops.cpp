#include "wgsum/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace wgsum::ad {
namespace {

enum class Broadcast { Same, RowB, ScalarB, RowA, ScalarA };

Broadcast broadcast_kind(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::Same;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::ScalarB;
  if (a.rows() == 1 && a.cols() == 1) return Broadcast::ScalarA;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::RowB;
  if (a.rows() == 1 && a.cols() == b.cols()) return Broadcast::RowA;
  throw ShapeError(std::string(op) + ": shape " + shape_string(a) +
                   " incompatible with " + shape_string(b));
}

// Expands `m` to rows x cols according to its broadcast role.
Matrix expand(const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  if (m.size() == 1) return Matrix::Constant(rows, cols, m(0, 0));
  return m.replicate(rows, 1);
}

// Reduces a full-shape gradient back onto the shape of `target`.
void accumulate_reduced(Matrix& target_grad, const Matrix& g) {
  if (target_grad.rows() == g.rows() && target_grad.cols() == g.cols()) {
    target_grad += g;
  } else if (target_grad.size() == 1) {
    target_grad(0, 0) += g.sum();
  } else {
    target_grad += g.colwise().sum();
  }
}

Tape& tape_of(const Var& a) { return *a.tape(); }

Tape& tape_of(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw std::invalid_argument("operands live on different tapes");
  return *a.tape();
}

template <typename F, typename DF>
Var unary(const Var& a, F f, DF df_from_xy) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  Matrix y = x.unaryExpr(f);
  return t.record(y, {a}, [a, df_from_xy](Tape& tp, const Matrix& g) {
    if (!tp.requires_grad(a)) return;
    const Matrix& x = a.value();
    Matrix d(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) d(i) = df_from_xy(x(i));
    tp.grad_of(a).array() += g.array() * d.array();
  });
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: shape " + shape_string(av) + " incompatible with " +
                     shape_string(bv));
  }
  Matrix out(av.rows(), bv.cols());
  out.noalias() = av * bv;
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) tp.grad_of(a).noalias() += g * b.value().transpose();
    if (tp.requires_grad(b)) tp.grad_of(b).noalias() += a.value().transpose() * g;
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.cols()) {
    throw ShapeError("matmul_nt: shape " + shape_string(av) + " incompatible with " +
                     shape_string(bv));
  }
  Matrix out(av.rows(), bv.rows());
  out.noalias() = av * bv.transpose();
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) tp.grad_of(a).noalias() += g * b.value();
    if (tp.requires_grad(b)) tp.grad_of(b).noalias() += g.transpose() * a.value();
  });
}

Var transpose(const Var& a) {
  Tape& t = tape_of(a);
  Matrix out = a.value().transpose();
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) tp.grad_of(a) += g.transpose();
  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Broadcast kind = broadcast_kind("add", av, bv);
  Matrix out;
  switch (kind) {
    case Broadcast::Same: out = av + bv; break;
    case Broadcast::RowB: out = av.rowwise() + bv.row(0); break;
    case Broadcast::ScalarB: out = av.array() + bv(0, 0); break;
    case Broadcast::RowA: out = bv.rowwise() + av.row(0); break;
    case Broadcast::ScalarA: out = bv.array() + av(0, 0); break;
  }
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) accumulate_reduced(tp.grad_of(a), g);
    if (tp.requires_grad(b)) accumulate_reduced(tp.grad_of(b), g);
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  broadcast_kind("sub", av, bv);
  const Eigen::Index r = std::max(av.rows(), bv.rows());
  const Eigen::Index c = std::max(av.cols(), bv.cols());
  Matrix out = expand(av, r, c) - expand(bv, r, c);
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) accumulate_reduced(tp.grad_of(a), g);
    if (tp.requires_grad(b)) accumulate_reduced(tp.grad_of(b), -g);
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  broadcast_kind("mul", av, bv);
  const Eigen::Index r = std::max(av.rows(), bv.rows());
  const Eigen::Index c = std::max(av.cols(), bv.cols());
  Matrix out = expand(av, r, c).cwiseProduct(expand(bv, r, c));
  return t.record(std::move(out), {a, b}, [a, b, r, c](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) {
      accumulate_reduced(tp.grad_of(a), g.cwiseProduct(expand(b.value(), r, c)));
    }
    if (tp.requires_grad(b)) {
      accumulate_reduced(tp.grad_of(b), g.cwiseProduct(expand(a.value(), r, c)));
    }
  });
}

Var affine(const Var& a, double alpha, double beta) {
  Tape& t = tape_of(a);
  Matrix out = (alpha * a.value().array() + beta).matrix();
  return t.record(std::move(out), {a}, [a, alpha](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) tp.grad_of(a) += alpha * g;
  });
}

Var scale(const Var& a, double alpha) { return affine(a, alpha, 0.0); }

Var tanh(const Var& a) {
  Tape& t = tape_of(a);
  Matrix y = a.value().array().tanh().matrix();
  return t.record(std::move(y), {a}, [a](Tape& tp, const Matrix& g) {
    if (!tp.requires_grad(a)) return;
    const Matrix& x = a.value();
    tp.grad_of(a).array() += g.array() * (1.0 - x.array().tanh().square());
  });
}

Var sigmoid(const Var& a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double x) {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 - s);
      });
}

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x) { return x > 0.0 ? 1.0 : slope; });
}

Var elu(const Var& a, double alpha) {
  return unary(
      a, [alpha](double x) { return x > 0.0 ? x : alpha * std::expm1(x); },
      [alpha](double x) { return x > 0.0 ? 1.0 : alpha * std::exp(x); });
}

Var gelu(const Var& a) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
      [inv_sqrt_2pi](double x) {
        const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
        return cdf + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
      });
}

Var exp(const Var& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var log_clamped(const Var& a, double floor) {
  return unary(
      a, [floor](double x) { return std::log(x > floor ? x : floor); },
      [floor](double x) { return x > floor ? 1.0 / x : 0.0; });
}

Var softmax_rows(const Var& a) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  Matrix ycopy = y;
  return t.record(std::move(y), {a}, [a, ycopy = std::move(ycopy)](Tape& tp, const Matrix& g) {
    if (!tp.requires_grad(a)) return;
    Matrix& ga = tp.grad_of(a);
    for (Eigen::Index r = 0; r < ycopy.rows(); ++r) {
      const double dot = g.row(r).dot(ycopy.row(r));
      ga.row(r).array() += ycopy.row(r).array() * (g.row(r).array() - dot);
    }
  });
}

Var masked_softmax_rows(const Var& a, const Matrix& mask) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  if (mask.rows() != x.rows() || mask.cols() != x.cols()) {
    throw ShapeError("masked_softmax_rows: shape " + shape_string(x) +
                     " incompatible with mask " + shape_string(mask));
  }
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (mask(r, c) != 0.0) m = std::max(m, x(r, c));
    }
    if (!std::isfinite(m)) {
      throw std::invalid_argument("masked_softmax_rows: row " + std::to_string(r) +
                                  " is fully masked");
    }
    double total = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (mask(r, c) != 0.0) {
        y(r, c) = std::exp(x(r, c) - m);
        total += y(r, c);
      }
    }
    y.row(r) /= total;
  }
  Matrix ycopy = y;
  return t.record(std::move(y), {a}, [a, ycopy = std::move(ycopy)](Tape& tp, const Matrix& g) {
    if (!tp.requires_grad(a)) return;
    Matrix& ga = tp.grad_of(a);
    for (Eigen::Index r = 0; r < ycopy.rows(); ++r) {
      const double dot = g.row(r).dot(ycopy.row(r));
      ga.row(r).array() += ycopy.row(r).array() * (g.row(r).array() - dot);
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& t = *parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: shape " + shape_string(parts.front().value()) +
                       " incompatible with " + shape_string(p.value()));
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  return t.record(std::move(out), parts, [parts](Tape& tp, const Matrix& g) {
    Eigen::Index off = 0;
    for (const Var& p : parts) {
      const Eigen::Index n = p.cols();
      if (tp.requires_grad(p)) tp.grad_of(p) += g.middleCols(off, n);
      off += n;
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Tape& t = *parts.front().tape();
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) {
      throw ShapeError("concat_rows: shape " + shape_string(parts.front().value()) +
                       " incompatible with " + shape_string(p.value()));
    }
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  return t.record(std::move(out), parts, [parts](Tape& tp, const Matrix& g) {
    Eigen::Index off = 0;
    for (const Var& p : parts) {
      const Eigen::Index n = p.rows();
      if (tp.requires_grad(p)) tp.grad_of(p) += g.middleRows(off, n);
      off += n;
    }
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  Tape& t = tape_of(a);
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of " + shape_string(a.value()));
  }
  Matrix out = a.value().middleCols(start, count);
  return t.record(std::move(out), {a}, [a, start, count](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) tp.grad_of(a).middleCols(start, count) += g;
  });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  Tape& t = tape_of(a);
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of " + shape_string(a.value()));
  }
  Matrix out = a.value().middleRows(start, count);
  return t.record(std::move(out), {a}, [a, start, count](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) tp.grad_of(a).middleRows(start, count) += g;
  });
}

Var row(const Var& a, Eigen::Index r) { return slice_rows(a, r, 1); }

Var gather_rows(const Var& table, std::span<const int> ids) {
  Tape& t = tape_of(table);
  const Matrix& tv = table.value();
  Matrix out(static_cast<Eigen::Index>(ids.size()), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows()) {
      throw ShapeError("gather_rows: id " + std::to_string(ids[i]) + " out of " +
                       shape_string(tv));
    }
    out.row(static_cast<Eigen::Index>(i)) = tv.row(ids[i]);
  }
  std::vector<int> idcopy(ids.begin(), ids.end());
  return t.record(std::move(out), {table},
                  [table, idcopy = std::move(idcopy)](Tape& tp, const Matrix& g) {
                    if (!tp.requires_grad(table)) return;
                    Matrix& gt = tp.grad_of(table);
                    for (std::size_t i = 0; i < idcopy.size(); ++i) {
                      gt.row(idcopy[i]) += g.row(static_cast<Eigen::Index>(i));
                    }
                  });
}

Var scatter_cols(const Var& x, std::span<const int> indices, Eigen::Index width) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  if (xv.rows() != 1 || xv.cols() != static_cast<Eigen::Index>(indices.size())) {
    throw ShapeError("scatter_cols: shape " + shape_string(xv) + " incompatible with " +
                     std::to_string(indices.size()) + " indices");
  }
  Matrix out = Matrix::Zero(1, width);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= width) {
      throw ShapeError("scatter_cols: index " + std::to_string(indices[i]) +
                       " out of width " + std::to_string(width));
    }
    out(0, indices[i]) += xv(0, static_cast<Eigen::Index>(i));
  }
  std::vector<int> idx(indices.begin(), indices.end());
  return t.record(std::move(out), {x}, [x, idx = std::move(idx)](Tape& tp, const Matrix& g) {
    if (!tp.requires_grad(x)) return;
    Matrix& gx = tp.grad_of(x);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      gx(0, static_cast<Eigen::Index>(i)) += g(0, idx[i]);
    }
  });
}

Var pick(const Var& a, Eigen::Index r, Eigen::Index c) {
  Tape& t = tape_of(a);
  const Matrix& av = a.value();
  if (r < 0 || c < 0 || r >= av.rows() || c >= av.cols()) {
    throw ShapeError("pick: (" + std::to_string(r) + ", " + std::to_string(c) +
                     ") out of " + shape_string(av));
  }
  Matrix out(1, 1);
  out(0, 0) = av(r, c);
  return t.record(std::move(out), {a}, [a, r, c](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) tp.grad_of(a)(r, c) += g(0, 0);
  });
}

Var sum(const Var& a) {
  Tape& t = tape_of(a);
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) tp.grad_of(a).array() += g(0, 0);
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var mean_rows(const Var& a) {
  Tape& t = tape_of(a);
  const double n = static_cast<double>(a.rows());
  Matrix out = a.value().colwise().sum() / n;
  return t.record(std::move(out), {a}, [a, n](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) tp.grad_of(a).rowwise() += g.row(0) / n;
  });
}

Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias, double eps) {
  Tape& t = tape_of(a, gain);
  const Matrix& x = a.value();
  const Eigen::Index n = x.cols();
  if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n) {
    throw ShapeError("layer_norm_rows: shape " + shape_string(x) + " incompatible with " +
                     shape_string(gain.value()));
  }
  Matrix xhat(x.rows(), n);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (x.row(r).array() - mu) * inv_std(r);
  }
  Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  return t.record(
      std::move(out), {a, gain, bias},
      [a, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& tp,
                                                                            const Matrix& g) {
        if (tp.requires_grad(gain)) {
          tp.grad_of(gain) += g.cwiseProduct(xhat).colwise().sum();
        }
        if (tp.requires_grad(bias)) tp.grad_of(bias) += g.colwise().sum();
        if (tp.requires_grad(a)) {
          Matrix& ga = tp.grad_of(a);
          const double n = static_cast<double>(xhat.cols());
          const auto& gv = gain.value();
          for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
            Eigen::RowVectorXd dxhat = g.row(r).cwiseProduct(gv.row(0));
            const double mean_d = dxhat.mean();
            const double mean_dx = dxhat.dot(xhat.row(r)) / n;
            ga.row(r).array() +=
                inv_std(r) * (dxhat.array() - mean_d - xhat.row(r).array() * mean_dx);
          }
        }
      });
}

Var dropout(const Var& a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be < 1");
  Tape& t = tape_of(a);
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  const double s = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask(i) = keep(rng) ? s : 0.0;
  return mul(a, t.constant(std::move(mask)));
}

}  // namespace wgsum::ad
