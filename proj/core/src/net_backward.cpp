#include <cmath>

#include "net_detail.hpp"

namespace neuroglue {

namespace detail {

Matrix mlp_backward(const Mlp& m, const MlpCache& cache, const Matrix& dout,
                    double leaky_slope, Mlp& grad) {
  Matrix d = dout;
  const std::size_t last = m.layers.size() - 1;
  for (std::size_t k = last + 1; k-- > 0;) {
    if (k != last) {
      if (!cache.masks.empty()) d = d.cwiseProduct(cache.masks[k]);
      const Matrix& pre = cache.pre[k];
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (pre.data()[i] <= 0.0) d.data()[i] *= leaky_slope;
      }
    }
    grad.layers[k].weight.noalias() += d.transpose() * cache.inputs[k];
    grad.layers[k].bias += d.colwise().sum().transpose();
    d = d * m.layers[k].weight;
  }
  return d;
}

Matrix concat_with_negation_backward(const Matrix& dconcat, int num_vars) {
  const auto n = static_cast<Eigen::Index>(num_vars);
  const auto d = dconcat.cols() / 2;
  Matrix dl = dconcat.leftCols(d);
  dl.topRows(n) += dconcat.block(n, d, n, d);
  dl.bottomRows(n) += dconcat.block(0, d, n, d);
  return dl;
}

Matrix normalize_rows_backward(const Matrix& hat, const Vector& rstd, const Matrix& dhat) {
  Matrix dx(hat.rows(), hat.cols());
  const double width = static_cast<double>(hat.cols());
  for (Eigen::Index r = 0; r < hat.rows(); ++r) {
    const double mean_d = dhat.row(r).sum() / width;
    const double mean_dh = dhat.row(r).dot(hat.row(r)) / width;
    dx.row(r) = rstd[r] * (dhat.row(r).array() - mean_d - hat.row(r).array() * mean_dh);
  }
  return dx;
}

}  // namespace detail

void backward(const NetParams& p, const HyperParams& h, const SparseGraph& g,
              const ForwardTape& tape, std::span<const double> dlogits, double dvalue,
              NetParams& grad) {
  const auto n = static_cast<Eigen::Index>(g.num_vars);
  const auto m = static_cast<Eigen::Index>(g.num_clauses);
  const int d = h.literal_dim;
  if (static_cast<Eigen::Index>(dlogits.size()) != n) {
    throw Error("backward: gradient size does not match the number of variables");
  }
  if (static_cast<int>(tape.iterations.size()) != h.iterations) {
    throw Error("backward: tape does not match hyperparameters");
  }

  Matrix dconcat = Matrix::Zero(2 * n, 2 * d);
  {
    Matrix dp(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) dp(i, 0) = dlogits[static_cast<std::size_t>(i)];
    dconcat.topRows(n) +=
        detail::mlp_backward(p.policy, tape.policy_mlp, dp, h.leaky_slope, grad.policy);
  }
  if (p.value && n > 0) {
    const double s = tape.value;
    const double dmean = dvalue * s * (1.0 - s);
    const Matrix dv = Matrix::Constant(2 * n, 1, dmean / static_cast<double>(2 * n));
    dconcat += detail::mlp_backward(*p.value, tape.value_mlp, dv, h.leaky_slope, *grad.value);
  }
  Matrix dl = detail::concat_with_negation_backward(dconcat, g.num_vars);

  for (int t = h.iterations; t-- > 0;) {
    const IterationCache& it = tape.iterations[static_cast<std::size_t>(t)];

    grad.ln_shift += dl.colwise().sum().transpose();
    grad.ln_scale += dl.cwiseProduct(it.literal_hat).colwise().sum().transpose();
    const Matrix dhat = dl.array().rowwise() * p.ln_scale.transpose().array();
    const Matrix dupdated = detail::normalize_rows_backward(it.literal_hat, it.literal_rstd, dhat);

    Matrix dprev = 0.1 * dupdated;
    const Matrix dscattered = detail::mlp_backward(p.l_update, it.literal_mlp, dupdated,
                                                   h.leaky_slope, grad.l_update);

    Matrix dclause_hat = Matrix::Zero(m, h.clause_dim);
    for (const Edge& e : g.edges) dclause_hat.row(e.row) += dscattered.row(e.col);
    const Matrix dclauses =
        detail::normalize_rows_backward(it.clause_hat, it.clause_rstd, dclause_hat);
    const Matrix dgathered = detail::mlp_backward(p.c_update, it.clause_mlp, dclauses,
                                                  h.leaky_slope, grad.c_update);

    Matrix dx = Matrix::Zero(2 * n, 2 * d);
    for (const Edge& e : g.edges) dx.row(e.col) += dgathered.row(e.row);
    dprev += detail::concat_with_negation_backward(dx, g.num_vars);
    dl = std::move(dprev);
  }
  grad.l_init += dl.colwise().sum().transpose();

  for (const auto& t : tensor_views(static_cast<const NetParams&>(grad))) {
    for (double v : t.data) {
      if (!std::isfinite(v)) throw Error("backward: non-finite gradient in " + t.name);
    }
  }
}

}  // namespace neuroglue
