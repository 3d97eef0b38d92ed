#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neuroglue/net.hpp"
#include "neuroglue/rl_env.hpp"

namespace neuroglue {

// ---------------------------------------------------------------------------
// Losses

std::vector<double> log_softmax(std::span<const double> logits);

// Softmax over raw glue counts.
std::vector<double> target_distribution(std::span<const double> counts);
std::vector<double> target_distribution(std::span<const std::uint64_t> counts);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> dlogits;
  double dvalue = 0.0;
};

// KL(target || softmax(logits)) and its gradient with respect to the logits.
LossGradient kl_loss(std::span<const double> target, std::span<const double> logits);

using LossFn = std::function<LossGradient(const ForwardOutput&)>;

struct LossAndGrad {
  double loss = 0.0;
  NetParams grad;
};

// One forward/backward pass of `loss` on a single graph.
LossAndGrad loss_and_gradient(const NetParams& p, const HyperParams& h, const SparseGraph& g,
                              const LossFn& loss, bool train_mode = false,
                              std::uint64_t dropout_seed = 0);

// ---------------------------------------------------------------------------
// Optimizers and gradient utilities

void add_scaled(NetParams& dst, const NetParams& src, double scale);
void scale_params(NetParams& p, double scale);
double global_norm(const NetParams& grads);
// Rescales so the global L2 norm is at most max_norm; returns the norm
// before clipping.
double clip_gradients(NetParams& grads, double max_norm);

// p <- p - lr * g, then avg <- avg + (p - avg) / (step + 1).
void asgd_step(NetParams& p, NetParams& avg, const NetParams& grads, double lr,
               std::uint64_t step);

struct AdamState {
  NetParams m;
  NetParams v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_params(const NetParams& p);
};

void adam_step(AdamState& state, NetParams& p, const NetParams& grads, double lr);

// ---------------------------------------------------------------------------
// Supervised training on glue-count labels

struct SupervisedExample {
  SparseGraph graph;
  std::vector<std::uint64_t> glue_counts;  // one per graph variable

  void validate() const;
};

struct SupervisedConfig {
  int epochs = 3;
  int batch_size = 8;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  // Iterate averaging starts after this many steps (before that the
  // average tracks the iterate).
  std::uint64_t average_start = 1'000'000;
  std::function<void(int epoch, double mean_kl)> on_epoch;
};

struct SupervisedResult {
  NetParams params;  // averaged iterate, used for evaluation
  NetParams last;    // final raw iterate
  std::vector<double> epoch_kl;  // mean training KL per epoch
};

SupervisedResult train_supervised(const std::vector<SupervisedExample>& dataset,
                                  const HyperParams& h, const SupervisedConfig& config,
                                  std::optional<NetParams> initial = std::nullopt);

// Mean KL over a dataset in evaluation mode.
double mean_kl(const NetParams& p, const HyperParams& h,
               const std::vector<SupervisedExample>& dataset);

// ---------------------------------------------------------------------------
// REINFORCE with a learned value baseline

struct EpisodeStep {
  SparseGraph observation;
  int action = 0;  // index into observation's variables
  double behavior_logprob = 0.0;
  double reward = 0.0;
};

using Episode = std::vector<EpisodeStep>;

struct ReinforceConfig {
  double value_coef = 0.5;
  double ratio_clip = 10.0;
  double advantage_eps = 1e-8;
};

// Undiscounted returns-to-go.
std::vector<double> returns_to_go(const Episode& episode);

struct ReinforceTerms {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double total = 0.0;
  double mean_return = 0.0;
  std::vector<double> ratios;      // clipped importance ratios, per step
  std::vector<double> advantages;  // normalized, per step
};

// Per-step coefficients of the surrogate objective, computed at the current
// parameters and then held fixed while differentiating.
struct ReinforceCoefficients {
  std::vector<double> policy_weight;  // ratio * normalized advantage
  std::vector<double> value_target;   // return clamped to [0, 1]
};

ReinforceCoefficients reinforce_coefficients(const std::vector<Episode>& episodes,
                                             const NetParams& p, const HyperParams& h,
                                             const ReinforceConfig& config,
                                             ReinforceTerms* terms = nullptr);

// -mean(w_t log pi(a_t|s_t)) + value_coef * mean((v(s_t) - target_t)^2) for
// fixed coefficients; accumulates the exact gradient when `grad` is given.
double reinforce_surrogate(const std::vector<Episode>& episodes, const NetParams& p,
                           const HyperParams& h, const ReinforceCoefficients& coeffs,
                           const ReinforceConfig& config, NetParams* grad = nullptr);

// Loss terms at `p`; fills `grad` with the gradient of the surrogate.
ReinforceTerms reinforce_loss(const std::vector<Episode>& episodes, const NetParams& p,
                              const HyperParams& h, const ReinforceConfig& config,
                              NetParams* grad = nullptr);

// Chooses an action index for an observation; returns (action, logprob).
using ActionChooser = std::function<std::pair<int, double>(const SparseGraph&, Rng&)>;

ActionChooser sample_from_policy(const NetParams& p, const HyperParams& h);
ActionChooser uniform_random_policy();

// Runs one episode from reset to terminal.
Episode rollout_episode(RlEnv& env, const Formula& phi, std::uint64_t seed,
                        const ActionChooser& choose);

struct RlConfig {
  int workers = 4;
  int episodes_per_worker = 2;
  int batches = 100;
  int grad_steps = 2;
  double lr = 1e-4;
  double max_grad_norm = 1.0;
  std::uint64_t seed = 1;
  ReinforceConfig loss;
  EnvConfig env;
  std::string checkpoint_path;
  std::function<void(int batch, const ReinforceTerms& terms)> on_batch;
};

NetParams train_rl(const std::vector<Formula>& formulas, const HyperParams& h,
                   const RlConfig& config, std::optional<NetParams> initial = std::nullopt);

// Formulas usable as RL training problems (reset succeeds).
std::vector<Formula> filter_rl_formulas(const std::vector<Formula>& formulas);

}  // namespace neuroglue
