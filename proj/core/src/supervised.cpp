#include <numeric>

#include "neuroglue/rng.hpp"
#include "neuroglue/trainer.hpp"

namespace neuroglue {

void SupervisedExample::validate() const {
  graph.validate();
  if (static_cast<int>(glue_counts.size()) != graph.num_vars) {
    throw Error("supervised example: glue count vector does not match the graph");
  }
  if (graph.num_vars == 0) throw Error("supervised example: graph has no variables");
}

namespace {

LossFn kl_to(std::vector<double> target) {
  return [target = std::move(target)](const ForwardOutput& out) {
    return kl_loss(target, out.policy_logits);
  };
}

}  // namespace

double mean_kl(const NetParams& p, const HyperParams& h,
               const std::vector<SupervisedExample>& dataset) {
  if (dataset.empty()) throw Error("mean_kl: empty dataset");
  double total = 0.0;
  for (const auto& ex : dataset) {
    const auto out = forward(p, h, ex.graph);
    total += kl_loss(target_distribution(ex.glue_counts), out.policy_logits).loss;
  }
  return total / static_cast<double>(dataset.size());
}

SupervisedResult train_supervised(const std::vector<SupervisedExample>& dataset,
                                  const HyperParams& h, const SupervisedConfig& config,
                                  std::optional<NetParams> initial) {
  if (dataset.empty()) throw Error("train_supervised: empty dataset");
  if (config.batch_size < 1) throw Error("train_supervised: batch size must be >= 1");
  for (const auto& ex : dataset) ex.validate();

  Rng rng(config.seed);
  NetParams params = initial ? std::move(*initial) : init_params(h, rng.next());
  NetParams avg = params;
  std::vector<std::vector<double>> targets;
  targets.reserve(dataset.size());
  for (const auto& ex : dataset) targets.push_back(target_distribution(ex.glue_counts));

  SupervisedResult result;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t step = 0;
  const bool dropout = h.dropout > 0.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double inv = 1.0 / static_cast<double>(end - start);
      NetParams grad = params.zeros_like();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        auto lg = loss_and_gradient(params, h, dataset[idx].graph, kl_to(targets[idx]),
                                    dropout, rng.next());
        epoch_loss += lg.loss;
        add_scaled(grad, lg.grad, inv);
      }
      if (step < config.average_start) {
        add_scaled(params, grad, -config.lr);
        avg = params;
      } else {
        asgd_step(params, avg, grad, config.lr, step - config.average_start);
      }
      ++step;
    }
    const double mean = epoch_loss / static_cast<double>(dataset.size());
    result.epoch_kl.push_back(mean);
    if (config.on_epoch) config.on_epoch(epoch, mean);
  }
  result.params = std::move(avg);
  result.last = std::move(params);
  return result;
}

}  // namespace neuroglue
