#ifndef WGSUM_NUMERICS_TENSOR_HPP_
#define WGSUM_NUMERICS_TENSOR_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace wgsum {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = MatrixX<double>;
using RowVector = RowVectorX<double>;
using Rng = std::mt19937_64;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_string(const Matrix& m);

enum class Init { Zeros, Uniform, XavierUniform };

/// A named learnable matrix. Gradients accumulate into `grad` across
/// backward passes until `ParameterStore::zero_grad` is called.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Init init = Init::Zeros;
};

/// Owns the parameters of one model. Addresses are stable for the store's
/// lifetime; iteration order is registration order.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter& add(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                 Init init, Rng& rng, double uniform_range = 0.1);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  std::vector<Parameter*> all();
  std::size_t scalar_count() const;

  void zero_grad();
  double grad_norm() const;
  /// Rescales all gradients so their global L2 norm is at most `max_norm`.
  void clip_grad_norm(double max_norm);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

  Tape* tape() const { return tape_; }
  std::size_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the node
/// vector is already a topological order for the backward sweep.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix&)>;

  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Parameter& param);

  /// Appends an op result. `backward` receives the upstream gradient of the
  /// new node and must accumulate into its inputs via `grad_of`.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Matrix value, const std::vector<Var>& inputs, Backward backward);

  const Matrix& value(const Var& v) const;
  bool requires_grad(const Var& v) const;

  /// Lazily allocated gradient buffer of `v`. Only call when requires_grad(v).
  Matrix& grad_of(const Var& v);

  /// Gradient of the last backward pass, or zeros if none reached `v`.
  Matrix gradient(const Var& v) const;

  void backward(const Var& loss);

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Parameter* parameter = nullptr;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool recording_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

}  // namespace wgsum

#endif  // WGSUM_NUMERICS_TENSOR_HPP_
