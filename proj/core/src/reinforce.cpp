#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "neuroglue/trainer.hpp"

namespace neuroglue {

std::vector<double> returns_to_go(const Episode& episode) {
  std::vector<double> out(episode.size());
  double acc = 0.0;
  for (std::size_t t = episode.size(); t-- > 0;) {
    acc += episode[t].reward;
    out[t] = acc;
  }
  return out;
}

namespace {

std::size_t count_steps(const std::vector<Episode>& episodes) {
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.size();
  return n;
}

}  // namespace

ReinforceCoefficients reinforce_coefficients(const std::vector<Episode>& episodes,
                                             const NetParams& p, const HyperParams& h,
                                             const ReinforceConfig& config,
                                             ReinforceTerms* terms) {
  const std::size_t total = count_steps(episodes);
  if (total == 0) throw Error("reinforce: empty batch");
  if (!p.value) throw Error("reinforce: parameters have no value head");

  std::vector<double> logp(total), ratio(total), value(total), ret(total);
  std::size_t t = 0;
  double return_sum = 0.0;
  for (const auto& episode : episodes) {
    const auto rtg = returns_to_go(episode);
    if (!rtg.empty()) return_sum += rtg.front();
    for (std::size_t k = 0; k < episode.size(); ++k, ++t) {
      const auto& step = episode[k];
      const auto out = forward(p, h, step.observation);
      if (step.action < 0 || step.action >= static_cast<int>(out.policy_logits.size())) {
        throw Error("reinforce: action out of range for its observation");
      }
      logp[t] = log_softmax(out.policy_logits)[static_cast<std::size_t>(step.action)];
      ratio[t] = std::clamp(std::exp(logp[t] - step.behavior_logprob), 0.0, config.ratio_clip);
      value[t] = *out.value;
      ret[t] = rtg[k];
    }
  }

  std::vector<double> adv(total);
  double mean = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    adv[i] = ret[i] - value[i];
    mean += adv[i];
  }
  mean /= static_cast<double>(total);
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= static_cast<double>(total);
  const double denom = std::sqrt(var) + config.advantage_eps;
  for (double& a : adv) a = (a - mean) / denom;

  ReinforceCoefficients c;
  c.policy_weight.resize(total);
  c.value_target.resize(total);
  double policy_loss = 0.0;
  double value_loss = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    c.policy_weight[i] = ratio[i] * adv[i];
    c.value_target[i] = std::clamp(ret[i], 0.0, 1.0);
    policy_loss -= c.policy_weight[i] * logp[i];
    const double diff = value[i] - c.value_target[i];
    value_loss += diff * diff;
  }
  if (terms) {
    terms->policy_loss = policy_loss / static_cast<double>(total);
    terms->value_loss = value_loss / static_cast<double>(total);
    terms->total = terms->policy_loss + config.value_coef * terms->value_loss;
    terms->mean_return = return_sum / static_cast<double>(episodes.size());
    terms->ratios = std::move(ratio);
    terms->advantages = std::move(adv);
  }
  return c;
}

double reinforce_surrogate(const std::vector<Episode>& episodes, const NetParams& p,
                           const HyperParams& h, const ReinforceCoefficients& coeffs,
                           const ReinforceConfig& config, NetParams* grad) {
  const std::size_t total = count_steps(episodes);
  if (total == 0) throw Error("reinforce: empty batch");
  if (coeffs.policy_weight.size() != total || coeffs.value_target.size() != total) {
    throw Error("reinforce: coefficients do not match the batch");
  }
  const double inv = 1.0 / static_cast<double>(total);
  double loss = 0.0;
  std::size_t t = 0;
  ForwardTape tape;
  for (const auto& episode : episodes) {
    for (const auto& step : episode) {
      const auto out = forward(p, h, step.observation, false, 0, grad ? &tape : nullptr);
      const auto logq = log_softmax(out.policy_logits);
      const auto a = static_cast<std::size_t>(step.action);
      const double w = coeffs.policy_weight[t];
      const double diff = *out.value - coeffs.value_target[t];
      loss += (-w * logq[a] + config.value_coef * diff * diff) * inv;
      if (grad) {
        std::vector<double> dlogits(logq.size());
        for (std::size_t i = 0; i < logq.size(); ++i) {
          dlogits[i] = w * inv * (std::exp(logq[i]) - (i == a ? 1.0 : 0.0));
        }
        backward(p, h, step.observation, tape, dlogits, config.value_coef * 2.0 * diff * inv,
                 *grad);
      }
      ++t;
    }
  }
  return loss;
}

ReinforceTerms reinforce_loss(const std::vector<Episode>& episodes, const NetParams& p,
                              const HyperParams& h, const ReinforceConfig& config,
                              NetParams* grad) {
  ReinforceTerms terms;
  const auto coeffs = reinforce_coefficients(episodes, p, h, config, &terms);
  if (grad) reinforce_surrogate(episodes, p, h, coeffs, config, grad);
  return terms;
}

ActionChooser sample_from_policy(const NetParams& p, const HyperParams& h) {
  return [&p, h](const SparseGraph& obs, Rng& rng) {
    const auto out = forward(p, h, obs);
    const auto logq = log_softmax(out.policy_logits);
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t a = logq.size() - 1;
    for (std::size_t i = 0; i < logq.size(); ++i) {
      acc += std::exp(logq[i]);
      if (u < acc) {
        a = i;
        break;
      }
    }
    return std::pair<int, double>{static_cast<int>(a), logq[a]};
  };
}

ActionChooser uniform_random_policy() {
  return [](const SparseGraph& obs, Rng& rng) {
    const auto n = static_cast<std::uint64_t>(obs.num_vars);
    return std::pair<int, double>{static_cast<int>(rng.below(n)),
                                  -std::log(static_cast<double>(n))};
  };
}

Episode rollout_episode(RlEnv& env, const Formula& phi, std::uint64_t seed,
                        const ActionChooser& choose) {
  Rng rng(seed);
  env.reset(phi, rng.next());
  Episode episode;
  while (!env.done()) {
    EpisodeStep step;
    step.observation = env.observation();
    std::tie(step.action, step.behavior_logprob) = choose(step.observation, rng);
    step.reward = env.step(step.action).reward;
    episode.push_back(std::move(step));
  }
  return episode;
}

std::vector<Formula> filter_rl_formulas(const std::vector<Formula>& formulas) {
  std::vector<Formula> usable;
  RlEnv env;
  for (const auto& f : formulas) {
    try {
      env.reset(f, 0);
      usable.push_back(f);
    } catch (const Error&) {
    }
  }
  return usable;
}

NetParams train_rl(const std::vector<Formula>& formulas, const HyperParams& h,
                   const RlConfig& config, std::optional<NetParams> initial) {
  if (!h.value_head) throw Error("train_rl: hyperparameters need a value head");
  if (config.workers < 1 || config.episodes_per_worker < 1 || config.grad_steps < 1) {
    throw Error("train_rl: workers, episodes and gradient steps must be >= 1");
  }
  const auto pool = filter_rl_formulas(formulas);
  if (pool.empty()) throw Error("train_rl: no usable training formulas");

  const Rng base(config.seed);
  NetParams params = initial ? std::move(*initial) : init_params(h, base.fork(~0ULL).next());
  AdamState adam = AdamState::for_params(params);
  const auto workers = static_cast<std::size_t>(config.workers);

  for (int batch = 0; batch < config.batches; ++batch) {
    const NetParams snapshot = params;
    std::vector<std::vector<Episode>> produced(workers);
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](std::size_t w) {
      try {
        Rng rng = base.fork(static_cast<std::uint64_t>(batch) * workers + w);
        RlEnv env(config.env);
        const auto chooser = sample_from_policy(snapshot, h);
        const Formula& phi = pool[rng.below(pool.size())];
        for (int e = 0; e < config.episodes_per_worker; ++e) {
          produced[w].push_back(rollout_episode(env, phi, rng.next(), chooser));
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };
    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> threads;
      for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
      for (auto& t : threads) t.join();
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    std::vector<Episode> episodes;
    for (auto& list : produced) {
      for (auto& e : list) episodes.push_back(std::move(e));
    }

    ReinforceTerms first_terms;
    for (int k = 0; k < config.grad_steps; ++k) {
      NetParams grad = params.zeros_like();
      auto terms = reinforce_loss(episodes, params, h, config.loss, &grad);
      if (k == 0) first_terms = std::move(terms);
      clip_gradients(grad, config.max_grad_norm);
      adam_step(adam, params, grad, config.lr);
    }
    if (config.on_batch) config.on_batch(batch, first_terms);
    if (!config.checkpoint_path.empty()) save_weights(config.checkpoint_path, params, h);
  }
  return params;
}

}  // namespace neuroglue
