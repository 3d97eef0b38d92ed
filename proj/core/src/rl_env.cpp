#include "neuroglue/rl_env.hpp"

#include <numeric>

#include "neuroglue/extract.hpp"

namespace neuroglue {

const SparseGraph& RlEnv::reset(const Formula& phi, std::uint64_t seed) {
  if (phi.num_vars < 1) throw Error("env reset: formula has no variables");
  solver_ = std::make_unique<Solver>(phi);
  rng_ = Rng(seed);
  num_vars_ = phi.num_vars;
  steps_ = 0;
  done_ = false;
  terminal_ = Terminal::kNone;
  if (!solver_->consistent() || solver_->propagate()) {
    done_ = true;
    throw Error("env reset: formula is refuted by root unit propagation");
  }
  if (static_cast<int>(solver_->num_assigned()) == num_vars_) {
    done_ = true;
    throw Error("env reset: root unit propagation assigns every variable");
  }
  refresh_observation();
  return observation_;
}

void RlEnv::refresh_observation() {
  auto g = extract_graph(*solver_, config_.edge_cap);
  if (!g) throw Error("env: observation exceeds the edge cap");
  observation_ = std::move(*g);
}

StepResult RlEnv::step(int action) {
  if (done_) throw Error("env step: episode is over");
  if (action < 0 || action >= observation_.num_vars) throw Error("env step: invalid action");
  StepResult r;
  r.var = observation_.var_map[static_cast<std::size_t>(action)];
  r.polarity = config_.forced_polarity ? *config_.forced_polarity : rng_.coin();
  ++steps_;
  solver_->decide(Literal(r.var, r.polarity));
  if (const auto conflict = solver_->propagate()) {
    // The analyzed clause only supplies the glue; it is never learned.
    r.glue = solver_->decision_level() == 0 ? 1 : solver_->analyze_conflict(*conflict).glue;
    if (r.glue < 1) r.glue = 1;
    r.reward = 1.0 / (static_cast<double>(r.glue) * r.glue);
    r.done = true;
    r.terminal = Terminal::kConflict;
  } else if (static_cast<int>(solver_->num_assigned()) == num_vars_) {
    r.reward = 0.0;
    r.done = true;
    r.terminal = Terminal::kSatisfied;
  } else {
    r.reward = -1.0 / static_cast<double>(num_vars_);
    refresh_observation();
  }
  done_ = r.done;
  terminal_ = r.terminal;
  return r;
}

std::vector<bool> RlEnv::model() const {
  std::vector<bool> m(static_cast<std::size_t>(num_vars_), false);
  for (int v = 1; v <= num_vars_; ++v) m[v - 1] = solver_->value(Literal(v, true)) > 0;
  return m;
}

double episode_return(std::span<const double> rewards) {
  return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

}  // namespace neuroglue
