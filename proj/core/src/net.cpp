#include "neuroglue/net.hpp"

#include <algorithm>
#include <cmath>

#include "net_detail.hpp"
#include "neuroglue/rng.hpp"

namespace neuroglue {

HyperParams HyperParams::supervised() { return HyperParams{}; }

HyperParams HyperParams::rl() {
  HyperParams h;
  h.literal_dim = 32;
  h.clause_dim = 64;
  h.iterations = 4;
  h.literal_layers = 3;
  h.clause_layers = 3;
  h.policy_layers = 4;
  h.value_head = true;
  return h;
}

void HyperParams::validate() const {
  if (literal_dim < 1 || clause_dim < 1) throw Error("hyperparams: dimensions must be >= 1");
  if (iterations < 1) throw Error("hyperparams: iterations must be >= 1");
  if (literal_layers < 1 || clause_layers < 1 || policy_layers < 1) {
    throw Error("hyperparams: layer counts must be >= 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("hyperparams: dropout must be in [0, 1)");
  if (!(ln_eps > 0.0)) throw Error("hyperparams: ln_eps must be > 0");
}

bool HyperParams::same_architecture(const HyperParams& o) const {
  return literal_dim == o.literal_dim && clause_dim == o.clause_dim &&
         iterations == o.iterations && literal_layers == o.literal_layers &&
         clause_layers == o.clause_layers && policy_layers == o.policy_layers &&
         value_head == o.value_head;
}

namespace {

// Hidden width is max(in, out).
Mlp zero_mlp(int in, int out, int layers) {
  const int hidden = std::max(in, out);
  Mlp m;
  for (int k = 0; k < layers; ++k) {
    const int fan_in = k == 0 ? in : hidden;
    const int fan_out = k == layers - 1 ? out : hidden;
    m.layers.push_back({Matrix::Zero(fan_out, fan_in), Vector::Zero(fan_out)});
  }
  return m;
}

Mlp zeros_like(const Mlp& m) {
  Mlp z;
  for (const auto& l : m.layers) {
    z.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()),
                        Vector::Zero(l.bias.size())});
  }
  return z;
}

template <typename View, typename Params>
std::vector<View> collect_views(Params& p) {
  std::vector<View> out;
  auto add_vector = [&](const std::string& name, auto& v) {
    out.push_back(View{name, {static_cast<int>(v.size())}, {v.data(), static_cast<std::size_t>(v.size())}});
  };
  auto add_mlp = [&](const std::string& prefix, auto& mlp) {
    for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
      auto& layer = mlp.layers[k];
      const std::string base = prefix + "." + std::to_string(k);
      out.push_back(View{base + ".weight",
                         {static_cast<int>(layer.weight.rows()), static_cast<int>(layer.weight.cols())},
                         {layer.weight.data(), static_cast<std::size_t>(layer.weight.size())}});
      add_vector(base + ".bias", layer.bias);
    }
  };
  add_vector("l_init", p.l_init);
  add_mlp("c_update", p.c_update);
  add_mlp("l_update", p.l_update);
  add_vector("layernorm.scale", p.ln_scale);
  add_vector("layernorm.shift", p.ln_shift);
  add_mlp("policy", p.policy);
  if (p.value) add_mlp("value", *p.value);
  return out;
}

}  // namespace

NetParams NetParams::zeros(const HyperParams& h) {
  h.validate();
  const int d = h.literal_dim;
  NetParams p;
  p.l_init = Vector::Zero(d);
  p.c_update = zero_mlp(2 * d, h.clause_dim, h.clause_layers);
  p.l_update = zero_mlp(h.clause_dim, d, h.literal_layers);
  p.policy = zero_mlp(2 * d, 1, h.policy_layers);
  if (h.value_head) p.value = zero_mlp(2 * d, 1, h.policy_layers);
  p.ln_scale = Vector::Zero(d);
  p.ln_shift = Vector::Zero(d);
  return p;
}

NetParams NetParams::zeros_like() const {
  NetParams z;
  z.l_init = Vector::Zero(l_init.size());
  z.c_update = neuroglue::zeros_like(c_update);
  z.l_update = neuroglue::zeros_like(l_update);
  z.policy = neuroglue::zeros_like(policy);
  if (value) z.value = neuroglue::zeros_like(*value);
  z.ln_scale = Vector::Zero(ln_scale.size());
  z.ln_shift = Vector::Zero(ln_shift.size());
  return z;
}

std::vector<TensorView> tensor_views(NetParams& p) {
  return collect_views<TensorView>(p);
}

std::vector<ConstTensorView> tensor_views(const NetParams& p) {
  return collect_views<ConstTensorView>(p);
}

std::size_t parameter_count(const NetParams& p) {
  std::size_t n = 0;
  for (const auto& t : tensor_views(p)) n += t.data.size();
  return n;
}

NetParams init_params(const HyperParams& h, std::uint64_t seed) {
  NetParams p = NetParams::zeros(h);
  Rng rng(seed);
  const double l_scale = 1.0 / std::sqrt(static_cast<double>(h.literal_dim));
  for (Eigen::Index i = 0; i < p.l_init.size(); ++i) p.l_init[i] = rng.normal() * l_scale;
  auto init_mlp = [&](Mlp& m) {
    for (auto& layer : m.layers) {
      const double fan_sum = static_cast<double>(layer.weight.rows() + layer.weight.cols());
      const double limit = std::sqrt(6.0 / fan_sum);
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
        layer.weight.data()[i] = (2.0 * rng.uniform() - 1.0) * limit;
      }
    }
  };
  init_mlp(p.c_update);
  init_mlp(p.l_update);
  init_mlp(p.policy);
  if (p.value) init_mlp(*p.value);
  p.ln_scale.setOnes();
  return p;
}

namespace detail {

Matrix mlp_forward(const Mlp& m, const Matrix& x, const MlpContext& ctx, MlpCache* cache) {
  Matrix cur = x;
  const std::size_t last = m.layers.size() - 1;
  for (std::size_t k = 0; k <= last; ++k) {
    const auto& layer = m.layers[k];
    if (cache) cache->inputs.push_back(cur);
    Matrix z = cur * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (k == last) return z;
    if (cache) cache->pre.push_back(z);
    const double slope = ctx.leaky_slope;
    z = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
    if (ctx.train && ctx.dropout > 0.0) {
      const double keep_scale = 1.0 / (1.0 - ctx.dropout);
      Matrix mask(z.rows(), z.cols());
      for (Eigen::Index i = 0; i < mask.size(); ++i) {
        mask.data()[i] = ctx.rng->uniform() < ctx.dropout ? 0.0 : keep_scale;
      }
      z = z.cwiseProduct(mask);
      if (cache) cache->masks.push_back(std::move(mask));
    }
    cur = std::move(z);
  }
  return cur;
}

Matrix concat_with_negation(const Matrix& literals, int num_vars) {
  const auto d = literals.cols();
  const auto n = static_cast<Eigen::Index>(num_vars);
  Matrix x(2 * n, 2 * d);
  x.leftCols(d) = literals;
  x.block(0, d, n, d) = literals.bottomRows(n);
  x.block(n, d, n, d) = literals.topRows(n);
  return x;
}

Matrix normalize_rows(const Matrix& x, double eps, Vector& rstd) {
  Matrix hat(x.rows(), x.cols());
  rstd.resize(x.rows());
  const double width = static_cast<double>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / width;
    const auto centered = x.row(r).array() - mean;
    const double var = centered.square().sum() / width;
    rstd[r] = 1.0 / std::sqrt(var + eps);
    hat.row(r) = centered * rstd[r];
  }
  return hat;
}

}  // namespace detail

Matrix standardize_rows(const Matrix& x, double eps) {
  Vector rstd;
  return detail::normalize_rows(x, eps, rstd);
}

ForwardOutput forward(const NetParams& p, const HyperParams& h, const SparseGraph& g,
                      bool train_mode, std::uint64_t dropout_seed, ForwardTape* tape) {
  const int d = h.literal_dim;
  if (p.l_init.size() != d || p.c_update.in_dim() != 2 * d ||
      p.c_update.out_dim() != h.clause_dim || p.l_update.in_dim() != h.clause_dim ||
      p.l_update.out_dim() != d || p.policy.in_dim() != 2 * d ||
      p.ln_scale.size() != d || p.ln_shift.size() != d ||
      static_cast<int>(p.c_update.layers.size()) != h.clause_layers ||
      static_cast<int>(p.l_update.layers.size()) != h.literal_layers ||
      static_cast<int>(p.policy.layers.size()) != h.policy_layers ||
      p.value.has_value() != h.value_head) {
    throw Error("forward: parameter shapes do not match hyperparameters");
  }
  const auto n = static_cast<Eigen::Index>(g.num_vars);
  const auto m = static_cast<Eigen::Index>(g.num_clauses);
  for (const Edge& e : g.edges) {
    if (e.row < 0 || e.row >= m || e.col < 0 || e.col >= 2 * n) {
      throw Error("forward: edge index out of range");
    }
  }

  Rng rng(dropout_seed);
  const detail::MlpContext ctx{h.leaky_slope, train_mode ? h.dropout : 0.0, train_mode, &rng};
  if (tape) {
    *tape = ForwardTape{};
    tape->train_mode = train_mode;
  }

  Matrix literals(2 * n, d);
  literals.rowwise() = p.l_init.transpose();

  for (int t = 0; t < h.iterations; ++t) {
    IterationCache* it = tape ? &tape->iterations.emplace_back() : nullptr;
    if (it) it->literals_in = literals;

    const Matrix x = detail::concat_with_negation(literals, g.num_vars);
    Matrix gathered = Matrix::Zero(m, 2 * d);
    for (const Edge& e : g.edges) gathered.row(e.row) += x.row(e.col);

    const Matrix clauses =
        detail::mlp_forward(p.c_update, gathered, ctx, it ? &it->clause_mlp : nullptr);
    Vector clause_rstd;
    Matrix clause_hat = detail::normalize_rows(clauses, h.ln_eps, clause_rstd);

    Matrix scattered = Matrix::Zero(2 * n, h.clause_dim);
    for (const Edge& e : g.edges) scattered.row(e.col) += clause_hat.row(e.row);

    Matrix updated =
        detail::mlp_forward(p.l_update, scattered, ctx, it ? &it->literal_mlp : nullptr);
    updated += 0.1 * literals;

    Vector literal_rstd;
    Matrix literal_hat = detail::normalize_rows(updated, h.ln_eps, literal_rstd);
    literals = literal_hat.array().rowwise() * p.ln_scale.transpose().array();
    literals.rowwise() += p.ln_shift.transpose();

    if (!literals.allFinite()) {
      throw Error("forward: non-finite literal embedding in iteration " + std::to_string(t));
    }
    if (it) {
      it->clause_hat = std::move(clause_hat);
      it->clause_rstd = std::move(clause_rstd);
      it->literal_hat = std::move(literal_hat);
      it->literal_rstd = std::move(literal_rstd);
    }
  }

  const Matrix x = detail::concat_with_negation(literals, g.num_vars);
  ForwardOutput out;
  const Matrix logits =
      detail::mlp_forward(p.policy, x.topRows(n), ctx, tape ? &tape->policy_mlp : nullptr);
  out.policy_logits.assign(logits.data(), logits.data() + logits.size());
  for (double z : out.policy_logits) {
    if (!std::isfinite(z)) throw Error("forward: non-finite policy logit");
  }
  if (p.value) {
    const Matrix v = detail::mlp_forward(*p.value, x, ctx, tape ? &tape->value_mlp : nullptr);
    const double mean = v.size() == 0 ? 0.0 : v.mean();
    out.value = 1.0 / (1.0 + std::exp(-mean));
    if (tape) tape->value = *out.value;
  }
  if (tape) tape->final_literals = std::move(literals);
  return out;
}

}  // namespace neuroglue
