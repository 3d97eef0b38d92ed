#include <doctest.h>

#include "gradcheck.hpp"
#include "neuroglue/rl_env.hpp"
#include "neuroglue/trainer.hpp"

using namespace neuroglue;

namespace {

SparseGraph small_graph(std::uint64_t seed) {
  return clause_literal_graph(random_ksat(6, 8, 3, seed));
}

// Small architecture with a value head; every tensor kind of the RL preset.
HyperParams compact_rl() {
  HyperParams h = HyperParams::rl();
  h.literal_dim = 6;
  h.clause_dim = 10;
  h.iterations = 3;
  h.literal_layers = 2;
  h.clause_layers = 3;
  h.policy_layers = 3;
  return h;
}

void perturb_affine(NetParams& p, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& t : tensor_views(p)) {
    if (t.name.find("weight") != std::string::npos) continue;
    for (double& x : t.data) x += 0.2 * (rng.uniform() - 0.5);
  }
}

void check_reports(const std::vector<gradcheck::TensorReport>& reports) {
  for (const auto& r : reports) {
    INFO(r.name, " analytic ", r.analytic_norm, " numeric ", r.numeric_norm);
    CHECK(r.checked > 0);
    CHECK(r.rel_error <= 1e-4);
  }
}

std::vector<Episode> sample_episodes(const HyperParams& h, const NetParams& p,
                                     std::uint64_t seed, int count) {
  std::vector<Formula> pool;
  for (std::uint64_t s = seed; pool.size() < 3; ++s) {
    auto f = random_ksat(6, 8, 3, s);
    if (!filter_rl_formulas({f}).empty()) pool.push_back(f);
  }
  RlEnv env;
  const auto chooser = sample_from_policy(p, h);
  std::vector<Episode> out;
  for (int e = 0; e < count; ++e) {
    out.push_back(rollout_episode(env, pool[static_cast<std::size_t>(e) % pool.size()],
                                  seed * 100 + static_cast<std::uint64_t>(e), chooser));
  }
  return out;
}

}  // namespace

TEST_CASE("KL gradient matches finite differences") {
  const auto h = HyperParams::supervised();
  auto p = init_params(h, 3);
  perturb_affine(p, 4);
  const auto g = small_graph(2);
  REQUIRE(g.num_vars == 6);
  REQUIRE(g.num_clauses == 8);
  const std::vector<std::uint64_t> counts{0, 3, 1, 0, 2, 5};
  const auto target = target_distribution(counts);
  const LossFn loss = [&](const ForwardOutput& out) { return kl_loss(target, out.policy_logits); };

  SUBCASE("evaluation mode") {
    const auto lg = loss_and_gradient(p, h, g, loss);
    check_reports(gradcheck::compare(
        p, lg.grad, [&](const NetParams& q) { return loss(forward(q, h, g)).loss; }, 1e-5));
  }
  SUBCASE("training mode with a fixed dropout mask") {
    const auto lg = loss_and_gradient(p, h, g, loss, true, 77);
    check_reports(gradcheck::compare(
        p, lg.grad, [&](const NetParams& q) { return loss(forward(q, h, g, true, 77)).loss; },
        1e-5));
  }
}

TEST_CASE("value head gradient matches finite differences") {
  const auto h = compact_rl();
  auto p = init_params(h, 5);
  perturb_affine(p, 6);
  const auto g = small_graph(2);
  const LossFn loss = [](const ForwardOutput& out) {
    LossGradient lg;
    const double d = *out.value - 0.2;
    lg.loss = d * d + 0.3 * out.policy_logits[1];
    lg.dvalue = 2 * d;
    lg.dlogits.assign(out.policy_logits.size(), 0.0);
    lg.dlogits[1] = 0.3;
    return lg;
  };
  const auto lg = loss_and_gradient(p, h, g, loss);
  check_reports(gradcheck::compare(
      p, lg.grad, [&](const NetParams& q) { return loss(forward(q, h, g)).loss; }, 1e-5));
}

TEST_CASE("REINFORCE surrogate gradient matches finite differences") {
  const auto h = compact_rl();
  auto p = init_params(h, 8);
  perturb_affine(p, 9);
  const auto episodes = sample_episodes(h, p, 31, 5);
  std::size_t steps = 0;
  for (const auto& e : episodes) steps += e.size();
  REQUIRE(steps >= 5);

  ReinforceConfig cfg;
  const auto coeffs = reinforce_coefficients(episodes, p, h, cfg);
  NetParams grad = p.zeros_like();
  reinforce_surrogate(episodes, p, h, coeffs, cfg, &grad);
  check_reports(gradcheck::compare(
      p, grad,
      [&](const NetParams& q) { return reinforce_surrogate(episodes, q, h, coeffs, cfg); },
      1e-5));

  // reinforce_loss produces the same gradient
  NetParams via_loss = p.zeros_like();
  reinforce_loss(episodes, p, h, cfg, &via_loss);
  auto a = tensor_views(grad);
  auto b = tensor_views(via_loss);
  for (std::size_t t = 0; t < a.size(); ++t) {
    CHECK(std::equal(a[t].data.begin(), a[t].data.end(), b[t].data.begin()));
  }
}

// At 64 channels and four rounds some pre-activations sit within 1e-5 of the
// LeakyReLU kink, so this check uses a smaller step.
TEST_CASE("REINFORCE gradient on the full RL architecture, sampled entries") {
  const auto h = HyperParams::rl();
  auto p = init_params(h, 10);
  perturb_affine(p, 11);  // zero biases put empty literal rows on the LeakyReLU kink
  const auto episodes = sample_episodes(h, p, 57, 2);
  ReinforceConfig cfg;
  const auto coeffs = reinforce_coefficients(episodes, p, h, cfg);
  NetParams grad = p.zeros_like();
  reinforce_surrogate(episodes, p, h, coeffs, cfg, &grad);
  check_reports(gradcheck::compare(
      p, grad,
      [&](const NetParams& q) { return reinforce_surrogate(episodes, q, h, coeffs, cfg); }, 1e-7,
      12, 3, 1e-4));
}

TEST_CASE("gradient accumulation is additive") {
  const auto h = HyperParams::supervised();
  const auto p = init_params(h, 1);
  const auto g1 = small_graph(1);
  const auto g2 = small_graph(2);
  const LossFn first = [&](const ForwardOutput& out) {
    return kl_loss(target_distribution(std::vector<double>(6, 0.0)), out.policy_logits);
  };
  auto a = loss_and_gradient(p, h, g1, first).grad;
  const auto b = loss_and_gradient(p, h, g2, first).grad;
  ForwardTape tape;
  const auto out = forward(p, h, g2, false, 0, &tape);
  backward(p, h, g2, tape, first(out).dlogits, 0.0, a);  // accumulates on top of g1's
  const auto only1 = loss_and_gradient(p, h, g1, first).grad;
  auto va = tensor_views(a);
  const auto vb = tensor_views(b);
  const auto v1 = tensor_views(only1);
  for (std::size_t t = 0; t < va.size(); ++t) {
    for (std::size_t i = 0; i < va[t].data.size(); ++i) {
      CHECK(va[t].data[i] == doctest::Approx(v1[t].data[i] + vb[t].data[i]).epsilon(1e-12));
    }
  }
}
