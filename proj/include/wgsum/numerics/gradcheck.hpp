#ifndef WGSUM_NUMERICS_GRADCHECK_HPP_
#define WGSUM_NUMERICS_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "wgsum/numerics/tensor.hpp"

namespace wgsum {

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Coordinates sampled per parameter; 0 checks every coordinate.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
  /// Relative error is |a - n| / max(|a|, |n|, floor), so gradients far
  /// below the finite-difference noise level are compared absolutely.
  double denominator_floor = 1e-6;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates_checked = 0;
};

using LossFunction = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients of `loss` with central differences.
/// `loss` must be deterministic; it is re-evaluated on fresh tapes.
GradCheckResult finite_difference_check(const LossFunction& loss,
                                        std::span<Parameter* const> params,
                                        const GradCheckOptions& options = {});

}  // namespace wgsum

#endif  // WGSUM_NUMERICS_GRADCHECK_HPP_
