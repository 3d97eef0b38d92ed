#pragma once

#include "neuroglue/net.hpp"
#include "neuroglue/rng.hpp"

namespace neuroglue::detail {

struct MlpContext {
  double leaky_slope = 0.01;
  double dropout = 0.0;
  bool train = false;
  Rng* rng = nullptr;
};

Matrix mlp_forward(const Mlp& m, const Matrix& x, const MlpContext& ctx, MlpCache* cache);
// Returns d(loss)/d(input) and accumulates parameter gradients into `grad`.
Matrix mlp_backward(const Mlp& m, const MlpCache& cache, const Matrix& dout,
                    double leaky_slope, Mlp& grad);

// Rows [L, L-bar]: each literal's embedding next to its negation's.
Matrix concat_with_negation(const Matrix& literals, int num_vars);
Matrix concat_with_negation_backward(const Matrix& dconcat, int num_vars);

// Row-wise (x - mean) / sqrt(var + eps); rstd receives 1/sqrt(var + eps).
Matrix normalize_rows(const Matrix& x, double eps, Vector& rstd);
Matrix normalize_rows_backward(const Matrix& hat, const Vector& rstd, const Matrix& dhat);

}  // namespace neuroglue::detail
