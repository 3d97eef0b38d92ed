#include <algorithm>
#include <cmath>

#include "neuroglue/trainer.hpp"

namespace neuroglue {

std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double max = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - max);
  const double log_total = max + std::log(total);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_total;
  return out;
}

std::vector<double> target_distribution(std::span<const double> counts) {
  if (counts.empty()) throw Error("target_distribution: empty counts");
  auto out = log_softmax(counts);
  for (double& v : out) v = std::exp(v);
  return out;
}

std::vector<double> target_distribution(std::span<const std::uint64_t> counts) {
  std::vector<double> c(counts.begin(), counts.end());
  return target_distribution(std::span<const double>(c));
}

LossGradient kl_loss(std::span<const double> target, std::span<const double> logits) {
  if (target.size() != logits.size()) throw Error("kl_loss: length mismatch");
  const auto logq = log_softmax(logits);
  LossGradient out;
  out.dlogits.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (target[i] > 0.0) out.loss += target[i] * (std::log(target[i]) - logq[i]);
    out.dlogits[i] = std::exp(logq[i]) - target[i];
  }
  return out;
}

LossAndGrad loss_and_gradient(const NetParams& p, const HyperParams& h, const SparseGraph& g,
                              const LossFn& loss, bool train_mode,
                              std::uint64_t dropout_seed) {
  ForwardTape tape;
  const auto out = forward(p, h, g, train_mode, dropout_seed, &tape);
  const auto lg = loss(out);
  LossAndGrad result{lg.loss, p.zeros_like()};
  backward(p, h, g, tape, lg.dlogits, lg.dvalue, result.grad);
  return result;
}

}  // namespace neuroglue
