#ifndef WGSUM_NUMERICS_OPS_HPP_
#define WGSUM_NUMERICS_OPS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "wgsum/numerics/tensor.hpp"

// Differentiable free functions over Tape variables. All tensors are 2-D;
// vectors are 1 x n rows. Binary elementwise ops accept equal shapes, a
// 1 x c row broadcast over r x c, or a 1 x 1 scalar broadcast.
namespace wgsum::ad {

Var matmul(const Var& a, const Var& b);
/// a * b^T without materializing the transpose.
Var matmul_nt(const Var& a, const Var& b);
Var transpose(const Var& a);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
/// alpha * a + beta
Var affine(const Var& a, double alpha, double beta);
Var scale(const Var& a, double alpha);

Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var elu(const Var& a, double alpha = 1.0);
/// Exact (erf-based) GELU.
Var gelu(const Var& a);
Var exp(const Var& a);
/// log(max(a, floor)); the gradient is zero where the floor is active.
Var log_clamped(const Var& a, double floor);

/// Softmax along each row.
Var softmax_rows(const Var& a);
/// Row softmax restricted to entries where mask != 0. Masked entries are
/// exactly zero. Every row needs at least one unmasked entry.
Var masked_softmax_rows(const Var& a, const Matrix& mask);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count);
Var row(const Var& a, Eigen::Index r);

/// Embedding lookup: row `ids[i]` of `table` becomes row i of the result.
Var gather_rows(const Var& table, std::span<const int> ids);
/// Adds x(0, i) into slot indices[i] of a 1 x width row.
Var scatter_cols(const Var& x, std::span<const int> indices, Eigen::Index width);
Var pick(const Var& a, Eigen::Index r, Eigen::Index c);

Var sum(const Var& a);
Var mean(const Var& a);
/// Column-wise mean over rows: r x c -> 1 x c.
Var mean_rows(const Var& a);

Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias, double eps = 1e-6);

/// Inverted dropout; the sampled mask is a constant of the graph.
Var dropout(const Var& a, double rate, Rng& rng);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }

}  // namespace wgsum::ad

#endif  // WGSUM_NUMERICS_OPS_HPP_
