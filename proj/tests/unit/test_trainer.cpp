#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "neuroglue/rl_env.hpp"
#include "neuroglue/trainer.hpp"
#include "oracles.hpp"

using namespace neuroglue;

namespace {

// Tiny architecture for optimizer tests; only the tensor container matters.
HyperParams tiny() {
  HyperParams h;
  h.literal_dim = 2;
  h.clause_dim = 2;
  h.iterations = 1;
  h.literal_layers = 1;
  h.clause_layers = 1;
  h.policy_layers = 1;
  h.dropout = 0.0;
  return h;
}

NetParams filled(const NetParams& like, double value) {
  NetParams p = like.zeros_like();
  for (auto& t : tensor_views(p)) std::fill(t.data.begin(), t.data.end(), value);
  return p;
}

std::vector<double> flat(const NetParams& p) {
  std::vector<double> out;
  for (const auto& t : tensor_views(p)) out.insert(out.end(), t.data.begin(), t.data.end());
  return out;
}

std::vector<SupervisedExample> toy_dataset(int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SupervisedExample> out;
  for (int i = 0; i < count; ++i) {
    SupervisedExample ex;
    ex.graph = clause_literal_graph(random_ksat(8, 24, 3, rng.next()));
    for (int v = 0; v < 8; ++v) ex.glue_counts.push_back(rng.below(4));
    out.push_back(ex);
  }
  return out;
}

Formula bandit() {
  Formula f;
  f.num_vars = 2;
  f.add_clause({1, 2});
  f.add_clause({1, -2});
  return f;
}

}  // namespace

TEST_CASE("target_distribution") {
  const auto u = target_distribution(std::vector<std::uint64_t>{0, 0, 0});
  for (double x : u) CHECK(x == doctest::Approx(1.0 / 3));
  const auto t = target_distribution(std::vector<std::uint64_t>{1, 0});
  CHECK(std::abs(t[0] - 0.7311) < 1e-4);
  CHECK(std::abs(t[1] - 0.2689) < 1e-4);
  CHECK(t[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1)).epsilon(1e-14));

  const std::vector<std::uint64_t> big{0, 700, 3, 9};
  const auto b = target_distribution(big);
  const auto ref = oracle::softmax(std::vector<double>(big.begin(), big.end()));
  double total = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    CHECK(b[i] >= 0.0);
    CHECK(std::abs(b[i] - ref[i]) < 1e-15);
    total += b[i];
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK_THROWS_AS(target_distribution(std::vector<std::uint64_t>{}), Error);
}

TEST_CASE("kl_loss") {
  const std::vector<double> logits{0.3, -1.0, 2.0};
  const auto q = oracle::softmax(logits);
  const auto same = kl_loss(q, logits);
  CHECK(std::abs(same.loss) < 1e-14);
  for (double g : same.dlogits) CHECK(std::abs(g) < 1e-14);

  const auto half = kl_loss(std::vector<double>{1, 0}, std::vector<double>{0, 0});
  CHECK(half.loss == doctest::Approx(std::log(2.0)));
  CHECK(std::abs(half.loss - 0.6931) < 1e-4);

  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> z(5), w(5);
    for (double& x : z) x = 20 * rng.uniform() - 10;
    for (double& x : w) x = 5 * rng.uniform();
    const auto target = oracle::softmax(w);
    const auto lg = kl_loss(target, z);
    CHECK(lg.loss >= -1e-15);
    // closed form from the oracle softmax
    const auto qz = oracle::softmax(z);
    double ref = 0;
    for (std::size_t i = 0; i < 5; ++i) ref += target[i] * std::log(target[i] / qz[i]);
    CHECK(lg.loss == doctest::Approx(ref).epsilon(1e-9));
  }

  const auto extreme = kl_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{1e4, -1e4});
  CHECK(std::isfinite(extreme.loss));
  for (double g : extreme.dlogits) CHECK(std::isfinite(g));
  const auto ls = log_softmax(std::vector<double>{1e4, -1e4, 0});
  for (double x : ls) CHECK(std::isfinite(x));

  CHECK_THROWS_AS(kl_loss(std::vector<double>{1.0}, std::vector<double>{0, 0}), Error);
}

TEST_CASE("a constant loss has zero gradient") {
  const auto h = HyperParams::rl();
  const auto p = init_params(h, 3);
  const auto g = clause_literal_graph(random_ksat(6, 8, 3, 1));
  const LossFn constant = [](const ForwardOutput& out) {
    LossGradient lg;
    lg.loss = 1.5;
    lg.dlogits.assign(out.policy_logits.size(), 0.0);
    return lg;
  };
  const auto lg = loss_and_gradient(p, h, g, constant);
  for (double x : flat(lg.grad)) CHECK(x == 0.0);
}

TEST_CASE("gradient clipping") {
  const auto base = init_params(tiny(), 1);
  const auto count = static_cast<double>(parameter_count(base));
  auto small = filled(base, 0.01);
  const auto before = flat(small);
  CHECK(clip_gradients(small, 1.0) == doctest::Approx(0.01 * std::sqrt(count)));
  CHECK(flat(small) == before);

  auto big = filled(base, 10.0 / std::sqrt(count));
  CHECK(global_norm(big) == doctest::Approx(10.0));
  clip_gradients(big, 1.0);
  for (double x : flat(big)) CHECK(x == doctest::Approx(1.0 / std::sqrt(count)));
  CHECK(global_norm(big) <= 1.0 + 1e-9);
  CHECK_THROWS_AS(clip_gradients(big, 0.0), Error);
}

TEST_CASE("ASGD step") {
  // f(w) = w^2 from w = 1, lr = 0.1
  const auto base = init_params(tiny(), 1);
  auto w = filled(base, 1.0);
  auto avg = w;
  auto grad = filled(base, 2.0);
  asgd_step(w, avg, grad, 0.1, 0);
  for (double x : flat(w)) CHECK(x == doctest::Approx(0.8));
  for (double x : flat(avg)) CHECK(x == doctest::Approx(0.8));
  grad = filled(base, 1.6);
  asgd_step(w, avg, grad, 0.1, 1);
  for (double x : flat(w)) CHECK(x == doctest::Approx(0.64));
  for (double x : flat(avg)) CHECK(x == doctest::Approx((0.8 + 0.64) / 2));
}

TEST_CASE("Adam step") {
  const auto base = init_params(tiny(), 1);
  for (double scale : {1e-6, 1.0, 1e6}) {
    auto p = filled(base, 0.5);
    auto state = AdamState::for_params(p);
    auto g = filled(base, scale);
    adam_step(state, p, g, 1e-3);
    for (double x : flat(p)) CHECK(std::abs((0.5 - x) - 1e-3) < 1e-5);
  }

  auto p = filled(base, 0.5);
  auto state = AdamState::for_params(p);
  adam_step(state, p, base.zeros_like(), 1e-3);
  for (double x : flat(p)) CHECK(x == 0.5);

  // f = sum (w - 3)^2 converges
  p = filled(base, 0.0);
  state = AdamState::for_params(p);
  int steps = 0;
  double loss = 1.0;
  for (; steps < 5000 && loss >= 1e-6; ++steps) {
    NetParams g = p.zeros_like();
    auto gv = tensor_views(g);
    const auto pv = tensor_views(std::as_const(p));
    loss = 0;
    for (std::size_t t = 0; t < gv.size(); ++t) {
      for (std::size_t i = 0; i < gv[t].data.size(); ++i) {
        const double d = pv[t].data[i] - 3.0;
        loss += d * d;
        gv[t].data[i] = 2 * d;
      }
    }
    adam_step(state, p, g, 0.05);
  }
  CHECK(loss < 1e-6);
}

TEST_CASE("supervised training") {
  const auto data = toy_dataset(6, 3);
  auto h = HyperParams::supervised();
  SupervisedConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 2;
  cfg.lr = 0.05;
  cfg.seed = 11;
  std::vector<double> seen;
  cfg.on_epoch = [&](int epoch, double kl) {
    CHECK(epoch == static_cast<int>(seen.size()));
    seen.push_back(kl);
  };
  const auto a = train_supervised(data, h, cfg);
  CHECK(seen == a.epoch_kl);
  REQUIRE(a.epoch_kl.size() == 6);
  CHECK(a.epoch_kl[2] <= a.epoch_kl[0]);
  cfg.on_epoch = nullptr;
  const auto b = train_supervised(data, h, cfg);
  CHECK(flat(a.params) == flat(b.params));
  CHECK(a.epoch_kl == b.epoch_kl);

  // iterate averaging starts after average_start steps
  cfg.average_start = 4;
  const auto c = train_supervised(data, h, cfg);
  CHECK(flat(c.params) != flat(c.last));
  cfg.average_start = 1'000'000;
  const auto d = train_supervised(data, h, cfg);
  CHECK(flat(d.params) == flat(d.last));

  CHECK(mean_kl(a.params, h, data) >= 0.0);
  CHECK_THROWS_AS(train_supervised({}, h, cfg), Error);
  auto bad = data;
  bad[0].glue_counts.pop_back();
  CHECK_THROWS_AS(train_supervised(bad, h, cfg), Error);
}

TEST_CASE("returns to go") {
  Episode e(3);
  e[0].reward = -0.25;
  e[1].reward = -0.25;
  e[2].reward = 1.0;
  const auto r = returns_to_go(e);
  CHECK(r == std::vector<double>{0.5, 0.75, 1.0});
  CHECK(returns_to_go(Episode{}).empty());
}

TEST_CASE("REINFORCE coefficients") {
  const auto h = HyperParams::rl();
  const auto p = init_params(h, 2);
  RlEnv env;
  const auto chooser = sample_from_policy(p, h);
  std::vector<Episode> episodes;
  for (std::uint64_t s = 0; s < 6; ++s) {
    episodes.push_back(rollout_episode(env, random_ksat(12, 40, 3, 3), s, chooser));
  }
  ReinforceConfig cfg;
  ReinforceTerms terms;
  const auto c = reinforce_coefficients(episodes, p, h, cfg, &terms);

  SUBCASE("on-policy ratios are exactly one") {
    for (double r : terms.ratios) CHECK(r == 1.0);
  }
  SUBCASE("advantages are normalized") {
    const auto& a = terms.advantages;
    const double n = static_cast<double>(a.size());
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double var = 0;
    for (double x : a) var += (x - mean) * (x - mean);
    var /= n;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-6);
  }
  SUBCASE("recomputed loss terms") {
    std::size_t t = 0;
    double policy = 0, value = 0, first_returns = 0;
    for (const auto& e : episodes) {
      const auto rtg = returns_to_go(e);
      first_returns += rtg.front();
      for (std::size_t k = 0; k < e.size(); ++k, ++t) {
        const auto out = forward(p, h, e[k].observation);
        const double logp = log_softmax(out.policy_logits)[static_cast<std::size_t>(e[k].action)];
        CHECK(logp == doctest::Approx(e[k].behavior_logprob).epsilon(1e-12));
        const double target = std::clamp(rtg[k], 0.0, 1.0);
        CHECK(c.value_target[t] == target);
        CHECK(c.policy_weight[t] == doctest::Approx(terms.advantages[t]));
        policy -= terms.advantages[t] * logp;
        value += (*out.value - target) * (*out.value - target);
      }
    }
    const double n = static_cast<double>(t);
    CHECK(terms.policy_loss == doctest::Approx(policy / n));
    CHECK(terms.value_loss == doctest::Approx(value / n));
    CHECK(terms.total == doctest::Approx(policy / n + 0.5 * value / n));
    CHECK(terms.mean_return == doctest::Approx(first_returns / double(episodes.size())));
  }
  SUBCASE("off-policy ratios are clipped") {
    auto shifted = episodes;
    for (auto& e : shifted) {
      for (auto& s : e) s.behavior_logprob -= 5.0;  // ratio e^5 > 10
    }
    ReinforceTerms off;
    reinforce_coefficients(shifted, p, h, cfg, &off);
    for (double r : off.ratios) CHECK(r == 10.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(reinforce_coefficients({}, p, h, cfg), Error);
    auto bad = episodes;
    bad[0][0].action = 1000;
    CHECK_THROWS_AS(reinforce_coefficients(bad, p, h, cfg), Error);
    CHECK_THROWS_AS(
        reinforce_coefficients(episodes, init_params(HyperParams::supervised(), 1),
                               HyperParams::supervised(), cfg),
        Error);
  }
}

TEST_CASE("equal advantages give no policy gradient") {
  // Two steps with identical state, return and value: advantages normalize to 0.
  const auto h = HyperParams::rl();
  const auto p = init_params(h, 6);
  RlEnv env;
  env.reset(bandit(), 0);
  EpisodeStep s;
  s.observation = env.observation();
  s.action = 0;
  s.reward = 0.3;
  s.behavior_logprob = log_softmax(forward(p, h, s.observation).policy_logits)[0];
  const std::vector<Episode> episodes{{s}, {s}};
  ReinforceConfig cfg;
  cfg.value_coef = 0.0;
  ReinforceTerms terms;
  const auto c = reinforce_coefficients(episodes, p, h, cfg, &terms);
  for (double a : terms.advantages) CHECK(a == 0.0);
  for (double w : c.policy_weight) CHECK(w == 0.0);
  NetParams grad = p.zeros_like();
  reinforce_surrogate(episodes, p, h, c, cfg, &grad);
  for (double x : flat(grad)) CHECK(x == 0.0);
}

TEST_CASE("RL training") {
  std::vector<Formula> formulas;
  for (std::uint64_t s = 0; s < 4; ++s) formulas.push_back(random_ksat(10, 30, 3, s));
  auto h = HyperParams::rl();
  RlConfig cfg;
  cfg.workers = 1;
  cfg.batches = 3;
  cfg.seed = 5;
  std::vector<int> batches;
  std::vector<ReinforceTerms> first;
  cfg.on_batch = [&](int b, const ReinforceTerms& t) {
    batches.push_back(b);
    first.push_back(t);
  };
  const auto path = std::filesystem::temp_directory_path() / "neuroglue_test_rl.ngw";
  cfg.checkpoint_path = path.string();
  const auto a = train_rl(formulas, h, cfg);
  CHECK(batches == std::vector<int>{0, 1, 2});
  for (const auto& t : first) {
    for (double r : t.ratios) CHECK(r == 1.0);  // first step after each snapshot
  }
  const auto [saved, sh] = load_weights(path.string());
  CHECK(sh == h);
  const auto af = flat(a);
  const auto sf = flat(saved);
  for (std::size_t i = 0; i < af.size(); ++i) {
    CHECK(sf[i] == static_cast<double>(static_cast<float>(af[i])));
  }

  cfg.on_batch = nullptr;
  cfg.checkpoint_path.clear();
  CHECK(flat(train_rl(formulas, h, cfg)) == af);

  cfg.workers = 3;
  const auto multi1 = train_rl(formulas, h, cfg);
  const auto multi2 = train_rl(formulas, h, cfg);
  CHECK(flat(multi1) == flat(multi2));

  CHECK_THROWS_AS(train_rl(formulas, HyperParams::supervised(), cfg), Error);
  Formula refuted;
  refuted.num_vars = 1;
  refuted.add_clause({1});
  refuted.add_clause({-1});
  CHECK_THROWS_AS(train_rl({refuted}, h, cfg), Error);
}
