#include "wgsum/numerics/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace wgsum {

void Adam::step(ParameterStore& params) {
  auto& s = state_;
  if (s.first_moment.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Matrix& v = params[i].value;
      s.first_moment.push_back(Matrix::Zero(v.rows(), v.cols()));
      s.second_moment.push_back(Matrix::Zero(v.rows(), v.cols()));
    }
  }
  if (s.first_moment.size() != params.size()) {
    throw std::invalid_argument("Adam: optimizer state does not match parameter count");
  }
  ++s.step;
  const auto& c = s.config;
  const double t = static_cast<double>(s.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    Matrix& m = s.first_moment[i];
    Matrix& v = s.second_moment[i];
    m = c.beta1 * m + (1.0 - c.beta1) * p.grad;
    v = c.beta2 * v + (1.0 - c.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= c.learning_rate * (m.array() / bias1) /
                       ((v.array() / bias2).sqrt() + c.epsilon);
  }
}

}  // namespace wgsum
