#include <cmath>

#include "neuroglue/trainer.hpp"

namespace neuroglue {

namespace {

template <typename Fn>
void zip_tensors(NetParams& a, const NetParams& b, Fn&& fn) {
  auto ta = tensor_views(a);
  const auto tb = tensor_views(b);
  if (ta.size() != tb.size()) throw Error("parameter structures differ");
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].dims != tb[i].dims) throw Error("parameter shapes differ: " + ta[i].name);
    for (std::size_t j = 0; j < ta[i].data.size(); ++j) fn(ta[i].data[j], tb[i].data[j]);
  }
}

}  // namespace

void add_scaled(NetParams& dst, const NetParams& src, double scale) {
  zip_tensors(dst, src, [scale](double& d, double s) { d += scale * s; });
}

void scale_params(NetParams& p, double scale) {
  for (auto& t : tensor_views(p)) {
    for (double& v : t.data) v *= scale;
  }
}

double global_norm(const NetParams& grads) {
  double sq = 0.0;
  for (const auto& t : tensor_views(grads)) {
    for (double v : t.data) sq += v * v;
  }
  return std::sqrt(sq);
}

double clip_gradients(NetParams& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw Error("clip_gradients: max_norm must be > 0");
  const double norm = global_norm(grads);
  if (norm > max_norm) scale_params(grads, max_norm / norm);
  return norm;
}

void asgd_step(NetParams& p, NetParams& avg, const NetParams& grads, double lr,
               std::uint64_t step) {
  add_scaled(p, grads, -lr);
  const double w = 1.0 / static_cast<double>(step + 1);
  zip_tensors(avg, p, [w](double& a, double x) { a += (x - a) * w; });
}

AdamState AdamState::for_params(const NetParams& p) {
  AdamState s;
  s.m = p.zeros_like();
  s.v = p.zeros_like();
  return s;
}

void adam_step(AdamState& state, NetParams& p, const NetParams& grads, double lr) {
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  auto tp = tensor_views(p);
  const auto tg = tensor_views(grads);
  auto tm = tensor_views(state.m);
  auto tv = tensor_views(state.v);
  if (tp.size() != tg.size() || tp.size() != tm.size()) throw Error("adam: structure mismatch");
  for (std::size_t i = 0; i < tp.size(); ++i) {
    for (std::size_t j = 0; j < tp[i].data.size(); ++j) {
      const double g = tg[i].data[j];
      double& m = tm[i].data[j];
      double& v = tv[i].data[j];
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v = state.beta2 * v + (1.0 - state.beta2) * g * g;
      tp[i].data[j] -= lr * (m / c1) / (std::sqrt(v / c2) + state.eps);
    }
  }
}

}  // namespace neuroglue
