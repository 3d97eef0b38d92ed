#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "neuroglue/cnf.hpp"
#include "neuroglue/rng.hpp"
#include "neuroglue/solver.hpp"

namespace neuroglue {

struct EnvConfig {
  std::size_t edge_cap = 10'000'000;
  // Overrides the uniform random polarity; used by scripted rollouts.
  std::optional<bool> forced_polarity;
};

enum class Terminal { kNone, kSatisfied, kConflict };

struct StepResult {
  double reward = 0.0;
  bool done = false;
  Terminal terminal = Terminal::kNone;
  int glue = 0;  // glue of the learned clause when terminal == kConflict
  int var = 0;   // original variable that was assigned
  bool polarity = false;
};

// Episodic environment over DPLL paths: each action assigns a variable a
// random polarity and unit-propagates; a conflict or a full assignment ends
// the episode. Learned clauses never carry over between episodes.
class RlEnv {
 public:
  explicit RlEnv(EnvConfig config = {}) : config_(config) {}

  // Throws Error if root propagation conflicts or assigns every variable.
  const SparseGraph& reset(const Formula& phi, std::uint64_t seed);
  // `action` indexes the variables of the current observation.
  StepResult step(int action);

  const SparseGraph& observation() const { return observation_; }
  bool done() const { return done_; }
  Terminal terminal() const { return terminal_; }
  int num_vars() const { return num_vars_; }
  int steps() const { return steps_; }
  // Full assignment after a satisfied terminal (index v-1).
  std::vector<bool> model() const;
  const Solver& solver() const { return *solver_; }

 private:
  void refresh_observation();

  EnvConfig config_;
  std::unique_ptr<Solver> solver_;
  Rng rng_{0};
  SparseGraph observation_;
  int num_vars_ = 0;
  int steps_ = 0;
  bool done_ = true;
  Terminal terminal_ = Terminal::kNone;
};

double episode_return(std::span<const double> rewards);

}  // namespace neuroglue
