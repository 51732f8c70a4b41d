#include "wgsum/numerics/tensor.hpp"

#include <cmath>
#include <sstream>

namespace wgsum {

std::string shape_string(const Matrix& m) {
  std::ostringstream os;
  os << "(" << m.rows() << "x" << m.cols() << ")";
  return os.str();
}

Parameter& ParameterStore::add(const std::string& name, Eigen::Index rows,
                               Eigen::Index cols, Init init, Rng& rng,
                               double uniform_range) {
  if (index_.count(name) != 0) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  auto param = std::make_unique<Parameter>();
  param->name = name;
  param->init = init;
  param->value = Matrix::Zero(rows, cols);
  param->grad = Matrix::Zero(rows, cols);

  double limit = 0.0;
  switch (init) {
    case Init::Zeros:
      break;
    case Init::Uniform:
      limit = uniform_range;
      break;
    case Init::XavierUniform:
      // rows = fan-in, cols = fan-out under the x * W convention.
      limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
      break;
  }
  if (limit > 0.0) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        param->value(r, c) = dist(rng);
      }
    }
  }

  index_.emplace(name, params_.size());
  params_.push_back(std::move(param));
  return *params_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return *params_[it->second];
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return *params_[it->second];
}

bool ParameterStore::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

double ParameterStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

void ParameterStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& p : params_) p->grad *= scale;
  }
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

Var Tape::parameter(Parameter& param) {
  Node node;
  node.parameter = &param;
  node.requires_grad = recording_;
  return push(std::move(node));
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  Node node;
  node.value = std::move(value);
  if (recording_) {
    for (const Var& in : inputs) {
      if (nodes_[in.index()].requires_grad) {
        node.requires_grad = true;
        break;
      }
    }
    if (node.requires_grad) node.backward = std::move(backward);
  }
  return push(std::move(node));
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, Backward backward) {
  Node node;
  node.value = std::move(value);
  if (recording_) {
    for (const Var& in : inputs) {
      if (nodes_[in.index()].requires_grad) {
        node.requires_grad = true;
        break;
      }
    }
    if (node.requires_grad) node.backward = std::move(backward);
  }
  return push(std::move(node));
}

const Matrix& Tape::value(const Var& v) const {
  const Node& node = nodes_[v.index()];
  return node.parameter != nullptr ? node.parameter->value : node.value;
}

bool Tape::requires_grad(const Var& v) const { return nodes_[v.index()].requires_grad; }

Matrix& Tape::grad_of(const Var& v) {
  Node& node = nodes_[v.index()];
  if (node.parameter != nullptr) return node.parameter->grad;
  if (node.grad.size() == 0) {
    const Matrix& val = node.value;
    node.grad = Matrix::Zero(val.rows(), val.cols());
  }
  return node.grad;
}

Matrix Tape::gradient(const Var& v) const {
  const Node& node = nodes_[v.index()];
  if (node.parameter != nullptr) return node.parameter->grad;
  if (node.grad.size() == 0) {
    const Matrix& val = node.value;
    return Matrix::Zero(val.rows(), val.cols());
  }
  return node.grad;
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw std::invalid_argument("backward: variable from another tape");
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + shape_string(lv));
  }
  if (!nodes_[loss.index()].requires_grad) return;
  grad_of(loss)(0, 0) += 1.0;
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || !node.backward || node.grad.size() == 0) continue;
    node.backward(*this, node.grad);
  }
}

}  // namespace wgsum
