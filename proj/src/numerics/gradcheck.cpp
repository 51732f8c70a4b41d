#include "wgsum/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace wgsum {
namespace {

double evaluate(const LossFunction& loss) {
  Tape tape(false);
  return loss(tape).scalar();
}

}  // namespace

GradCheckResult finite_difference_check(const LossFunction& loss,
                                        std::span<Parameter* const> params,
                                        const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0) || !std::isfinite(options.epsilon)) {
    throw std::invalid_argument("finite_difference_check: epsilon must be positive");
  }

  for (Parameter* p : params) p->grad.setZero();
  std::vector<Matrix> analytic;
  {
    Tape tape(true);
    Var l = loss(tape);
    tape.backward(l);
    for (Parameter* p : params) analytic.push_back(p->grad);
  }

  Rng rng(options.seed);
  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    const Eigen::Index n = p.value.size();
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(n));
    std::iota(coords.begin(), coords.end(), Eigen::Index{0});
    if (options.max_coords_per_param != 0 &&
        coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (Eigen::Index i : coords) {
      const double saved = p.value(i);
      p.value(i) = saved + options.epsilon;
      const double up = evaluate(loss);
      p.value(i) = saved - options.epsilon;
      const double down = evaluate(loss);
      p.value(i) = saved;

      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double a = analytic[k](i);
      const double denom =
          std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.coordinates_checked;
      if (rel > result.max_relative_error || result.worst_index < 0) {
        result.max_relative_error = std::max(rel, result.max_relative_error);
        result.worst_parameter = p.name;
        result.worst_index = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace wgsum
