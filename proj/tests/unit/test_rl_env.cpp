#include <doctest.h>

#include <cmath>

#include "neuroglue/rl_env.hpp"

using namespace neuroglue;

namespace {

Formula make(int n, std::initializer_list<std::initializer_list<int>> clauses) {
  Formula f;
  f.num_vars = n;
  for (auto c : clauses) f.add_clause(c);
  return f;
}

std::vector<int> unassigned(const Solver& s) {
  std::vector<int> out;
  for (int v = 1; v <= s.num_vars(); ++v) {
    if (!s.assigned(v)) out.push_back(v);
  }
  return out;
}

struct Trace {
  std::vector<int> vars;
  std::vector<bool> polarities;
  std::vector<double> rewards;
  bool operator==(const Trace&) const = default;
};

// Always plays the first available action.
Trace play_first(RlEnv& env, const Formula& f, std::uint64_t seed) {
  env.reset(f, seed);
  Trace t;
  while (!env.done()) {
    const auto r = env.step(0);
    t.vars.push_back(r.var);
    t.polarities.push_back(r.polarity);
    t.rewards.push_back(r.reward);
  }
  return t;
}

}  // namespace

TEST_CASE("reset") {
  RlEnv env;
  const auto f = make(3, {{1, 2}, {-1, 3}, {-2, -3}});
  CHECK(env.reset(f, 1) == clause_literal_graph(f));
  CHECK_FALSE(env.done());
  CHECK(env.steps() == 0);
  CHECK(env.num_vars() == 3);

  const auto& obs = env.reset(make(3, {{1}, {-1, 2}, {2, 3}}), 1);
  CHECK(obs.num_vars == 1);
  CHECK(obs.num_clauses == 0);
  CHECK(obs.edges.empty());
  CHECK(obs.var_map == std::vector<int>{3});

  CHECK_THROWS_AS(env.reset(make(0, {}), 1), Error);
  CHECK_THROWS_AS(env.reset(make(1, {{1}, {-1}}), 1), Error);
  CHECK_THROWS_AS(env.reset(make(2, {{1}, {-1, 2}, {-2, 1}}), 1), Error);  // fully assigned
  CHECK_THROWS_AS(env.reset(make(2, {{1}, {-1, 2}, {-2, -1}}), 1), Error);  // root conflict
  CHECK(env.done());
  CHECK_THROWS_AS(env.step(0), Error);
}

TEST_CASE("rewards") {
  SUBCASE("non-terminal step costs 1/n") {
    RlEnv env;
    env.reset(random_ksat(100, 150, 3, 4), 2);
    const auto r = env.step(0);
    REQUIRE_FALSE(r.done);
    CHECK(r.reward == -1.0 / 100);
    CHECK(r.reward == -0.01);
  }
  SUBCASE("conflict with glue 2") {
    RlEnv env(EnvConfig{.edge_cap = 1000, .forced_polarity = true});
    env.reset(make(3, {{-1, -2, 3}, {-1, -2, -3}}), 0);
    const auto first = env.step(0);  // x1 = true
    CHECK(first.var == 1);
    CHECK_FALSE(first.done);
    CHECK(first.reward == -1.0 / 3);
    CHECK(env.observation().var_map == std::vector<int>{2, 3});
    const auto second = env.step(0);  // x2 = true -> 3 and -3 both implied
    CHECK(second.done);
    CHECK(second.terminal == Terminal::kConflict);
    CHECK(second.glue == 2);
    CHECK(second.reward == 0.25);
    CHECK(env.terminal() == Terminal::kConflict);
  }
  SUBCASE("immediate glue-1 conflict") {
    RlEnv env(EnvConfig{.edge_cap = 1000, .forced_polarity = false});
    env.reset(make(2, {{1, 2}, {1, -2}}), 0);
    const auto r = env.step(0);  // x1 = false
    CHECK(r.done);
    CHECK(r.glue == 1);
    CHECK(r.reward == 1.0);
    CHECK(episode_return(std::vector<double>{r.reward}) == 1.0);
  }
  SUBCASE("every polarity outcome on a two-variable formula") {
    const auto f = make(2, {{1, 2}, {-1, -2}});
    for (int action : {0, 1}) {
      for (bool polarity : {false, true}) {
        RlEnv env(EnvConfig{.edge_cap = 1000, .forced_polarity = polarity});
        env.reset(f, 0);
        const auto r = env.step(action);
        CHECK(r.done);
        CHECK(r.terminal == Terminal::kSatisfied);
        CHECK(r.reward == 0.0);
        CHECK(satisfies(f, env.model()));
      }
    }
  }
}

TEST_CASE("episode_return") {
  CHECK(episode_return(std::vector<double>{-0.1, -0.1, -0.1, 0.0}) == doctest::Approx(-0.3));
  CHECK(episode_return(std::vector<double>{}) == 0.0);
}

TEST_CASE("random episodes obey the MDP invariants") {
  Rng rng(5);
  int satisfied = 0;
  int conflicts = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const int n = 5 + static_cast<int>(rng.below(30));
    const auto f = random_ksat(n, static_cast<int>(n * (2.0 + 3.0 * rng.uniform())), 3, seed);
    RlEnv env;
    try {
      env.reset(f, seed);
    } catch (const Error&) {
      continue;
    }
    std::vector<double> rewards;
    while (!env.done()) {
      CHECK(env.observation().var_map == unassigned(env.solver()));
      const auto& obs = env.observation();
      const int action = static_cast<int>(rng.below(static_cast<std::uint64_t>(obs.num_vars)));
      const int var = obs.var_map[static_cast<std::size_t>(action)];
      const auto r = env.step(action);
      CHECK(r.var == var);
      rewards.push_back(r.reward);
      if (!r.done) {
        CHECK(r.reward == -1.0 / n);
      } else if (r.terminal == Terminal::kSatisfied) {
        CHECK(r.reward == 0.0);
        CHECK(satisfies(f, env.model()));
        ++satisfied;
      } else {
        REQUIRE(r.terminal == Terminal::kConflict);
        CHECK(r.glue >= 1);
        CHECK(r.reward == 1.0 / (double(r.glue) * r.glue));
        ++conflicts;
      }
    }
    CHECK(env.steps() <= n);
    CHECK(static_cast<int>(rewards.size()) == env.steps());
    const double ret = episode_return(rewards);
    CHECK(ret > -1.0);
    CHECK(ret <= 1.0);
    CHECK_THROWS_AS(env.step(0), Error);
  }
  CHECK(satisfied > 10);
  CHECK(conflicts > 10);
}

TEST_CASE("invalid actions") {
  RlEnv env;
  env.reset(random_ksat(10, 20, 3, 1), 1);
  const int n = env.observation().num_vars;
  CHECK_THROWS_AS(env.step(-1), Error);
  CHECK_THROWS_AS(env.step(n), Error);
  CHECK_FALSE(env.done());
  RlEnv never_reset;
  CHECK_THROWS_AS(never_reset.step(0), Error);
}

TEST_CASE("episodes are reproducible and resets discard learning") {
  const auto f = random_ksat(30, 120, 3, 9);
  RlEnv env;
  const auto first = play_first(env, f, 42);
  for (std::uint64_t s = 0; s < 10; ++s) play_first(env, f, s);
  CHECK(play_first(env, f, 42) == first);
  RlEnv fresh;
  CHECK(play_first(fresh, f, 42) == first);
  CHECK(env.solver().learned_clauses().empty());
}
