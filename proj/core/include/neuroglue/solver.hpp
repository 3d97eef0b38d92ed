#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "neuroglue/cnf.hpp"
#include "neuroglue/refocus.hpp"
#include "neuroglue/var_heap.hpp"

namespace neuroglue {

enum class Status { kSat, kUnsat, kUnknown };

class Solver;

const char* to_string(Status s);

struct SolverConfig {
  double decay = 0.95;
  double ema_fast_alpha = 1.0 / 32.0;
  double ema_slow_alpha = 1.0 / 16384.0;
  int restart_interval = 2;
  double restart_margin = 1.25;
  std::uint64_t reduce_base = 2000;
  std::uint64_t reduce_increment = 300;
  RefocusConfig refocus;
  // Called with each search decision just before it is made.
  std::function<void(const Solver&, Literal)> on_decision;
};

// Per-call limits; unset fields are unlimited.
struct Budget {
  std::optional<std::uint64_t> conflicts;
  std::optional<std::uint64_t> decisions;
  std::optional<double> seconds;

  static Budget of_conflicts(std::uint64_t n) {
    Budget b;
    b.conflicts = n;
    return b;
  }
};

struct SolveStats {
  std::uint64_t decisions = 0;
  std::uint64_t conflicts = 0;
  std::uint64_t propagations = 0;
  std::uint64_t restarts = 0;
  std::uint64_t reductions = 0;
  std::uint64_t refocuses = 0;
  std::uint64_t refocus_skips = 0;
  std::uint64_t learned = 0;
  std::uint64_t glue_sum = 0;
  double seconds = 0.0;

  double avg_glue() const {
    return learned == 0 ? 0.0 : static_cast<double>(glue_sum) / learned;
  }
  // Global learning rate: conflicts per decision.
  double glr() const {
    return decisions == 0 ? 0.0 : static_cast<double>(conflicts) / decisions;
  }
};

struct SolveResult {
  Status status = Status::kUnknown;
  std::vector<bool> model;  // index v-1, only for kSat
  SolveStats stats;
  std::vector<std::uint64_t> glue_counts;  // index v-1
};

// Maps the residual clause-literal graph to one logit per compacted variable.
// Must be safe to call concurrently from independent solvers.
using RefocusOracle = std::function<std::vector<double>(const SparseGraph&)>;

using ClauseRef = std::uint32_t;
inline constexpr ClauseRef kNoReason = 0xffffffffu;

struct ConflictAnalysis {
  std::vector<Literal> learned;  // learned[0] is the asserting literal
  int backjump_level = 0;
  int glue = 0;
};

class Solver {
 public:
  explicit Solver(const Formula& f, SolverConfig config = {});

  Solver(const Solver&) = delete;
  Solver& operator=(const Solver&) = delete;

  // Runs CDCL search. Can be called again after kUnknown to continue with
  // the learned clause database intact.
  SolveResult solve(const Budget& budget = {},
                    const RefocusOracle* oracle = nullptr);

  // --- assignment -------------------------------------------------------
  int num_vars() const { return num_vars_; }
  // +1 true, -1 false, 0 unassigned
  int value(Literal l) const { return values_[l.code()]; }
  bool assigned(int var) const { return values_[Literal(var, true).code()] != 0; }
  int level(int var) const { return level_[var]; }
  ClauseRef reason(int var) const { return reason_[var]; }
  int decision_level() const { return static_cast<int>(trail_lim_.size()); }
  const std::vector<Literal>& trail() const { return trail_; }
  std::size_t num_assigned() const { return trail_.size(); }
  // False once a root-level conflict has been derived.
  bool consistent() const { return consistent_; }

  // Opens a new decision level and assigns `lit`.
  void decide(Literal lit);
  // Two-watched-literal unit propagation to fixpoint; returns the falsified
  // clause on conflict.
  std::optional<ClauseRef> propagate();
  void backtrack(int level);

  // First-UIP analysis of a conflict at decision level >= 1. Bumps every
  // variable seen during resolution. Does not modify the trail.
  ConflictAnalysis analyze_conflict(ClauseRef conflict);
  // Backjumps, stores the clause (unless unit) and asserts learned[0].
  void learn(const ConflictAnalysis& analysis);

  // Number of distinct decision levels among the (assigned) literals.
  int compute_lbd(std::span<const Literal> clause) const;

  // --- EVSIDS ----------------------------------------------------------
  void bump(int var);
  void decay();
  double activity(int var) const { return activity_[var]; }
  void set_activity(int var, double score);
  double bump_increment() const { return bump_increment_; }
  // Highest-activity unassigned variable (lowest index on ties) with its
  // saved phase; nullopt when everything is assigned.
  std::optional<Literal> pick_decision();

  // --- glue statistics, restarts, reduction ------------------------------
  void update_glue_emas(int glue);
  double ema_fast() const { return ema_fast_.value(); }
  double ema_slow() const { return ema_slow_.value(); }
  bool should_restart() const;
  void reduce_db();
  const std::vector<std::uint64_t>& glue_counts() const { return glue_counts_; }

  // --- periodic refocusing --------------------------------------------
  bool should_refocus(std::chrono::steady_clock::time_point now) const;
  // probs is indexed by variable-1 over all variables and must sum to 1.
  void apply_refocus(std::span<const double> probs, int graph_vars);
  std::uint64_t refocus_count() const { return stats_.refocuses; }

  // --- clause database --------------------------------------------------
  std::span<const Literal> clause(ClauseRef ref) const { return clauses_[ref].literals; }
  std::optional<int> clause_glue(ClauseRef ref) const;
  const std::vector<ClauseRef>& original_clauses() const { return originals_; }
  // Live learned clauses in learn order.
  const std::vector<ClauseRef>& learned_clauses() const { return learned_; }
  // Original clauses plus live learned clauses; learned units are included.
  Formula snapshot_formula() const;

  const SolveStats& stats() const { return stats_; }
  const SolverConfig& config() const { return config_; }
  // Two-watched-literal invariant over all live clauses; for tests.
  bool watches_consistent() const;

 private:
  struct StoredClause {
    std::vector<Literal> literals;
    int glue = 0;
    bool learnt = false;
    bool deleted = false;
  };
  struct Watch {
    ClauseRef ref;
    Literal blocker;
  };

  void assign(Literal lit, ClauseRef reason);
  void attach(ClauseRef ref);
  bool redundant(Literal lit, std::uint32_t abstract_levels,
                 std::vector<int>& to_clear);
  std::uint32_t abstract_level(int var) const { return 1u << (level_[var] & 31); }
  bool locked(ClauseRef ref) const;
  void refocus(const RefocusOracle& oracle);
  bool budget_exhausted(const Budget& budget, std::uint64_t start_conflicts,
                        std::uint64_t start_decisions,
                        std::chrono::steady_clock::time_point start) const;

  SolverConfig config_;
  int num_vars_ = 0;
  bool consistent_ = true;

  std::vector<StoredClause> clauses_;
  std::vector<ClauseRef> originals_;
  std::vector<ClauseRef> learned_;
  std::vector<Literal> learned_units_;
  std::vector<std::vector<Watch>> watches_;  // by literal code: clauses watching it

  std::vector<signed char> values_;  // by literal code
  std::vector<int> level_;           // by var
  std::vector<ClauseRef> reason_;    // by var
  std::vector<char> phase_;          // by var, saved polarity
  std::vector<Literal> trail_;
  std::vector<std::size_t> trail_lim_;
  std::size_t queue_head_ = 0;

  std::vector<double> activity_;  // by var
  double bump_increment_ = 1.0;
  VarHeap heap_;

  std::vector<char> seen_;
  mutable std::vector<std::uint64_t> lbd_stamp_;  // by decision level
  mutable std::uint64_t lbd_epoch_ = 0;
  GlueEma ema_fast_;
  GlueEma ema_slow_;
  std::uint64_t last_restart_conflicts_ = 0;
  std::uint64_t next_reduce_ = 0;
  std::uint64_t last_refocus_conflicts_ = 0;
  std::vector<std::uint64_t> glue_counts_;

  std::optional<std::chrono::steady_clock::time_point> started_;
  SolveStats stats_;
};

}  // namespace neuroglue
