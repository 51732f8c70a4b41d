#ifndef WGSUM_NUMERICS_ADAM_HPP_
#define WGSUM_NUMERICS_ADAM_HPP_

#include <cstdint>
#include <vector>

#include "wgsum/numerics/tensor.hpp"

namespace wgsum {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moments are kept per parameter in store registration order.
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) { state_.config = config; }

  /// One bias-corrected update of every parameter in `params` from its
  /// accumulated gradient.
  void step(ParameterStore& params);

  const AdamState& state() const { return state_; }
  void restore(AdamState state) { state_ = std::move(state); }
  const AdamConfig& config() const { return state_.config; }

 private:
  AdamState state_;
};

}  // namespace wgsum

#endif  // WGSUM_NUMERICS_ADAM_HPP_
