#include "neuroglue/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "neuroglue/extract.hpp"

namespace neuroglue {

namespace {
constexpr double kRescaleLimit = 1e100;
constexpr double kRescaleFactor = 1e-100;
}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::kSat: return "SAT";
    case Status::kUnsat: return "UNSAT";
    case Status::kUnknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

Solver::Solver(const Formula& f, SolverConfig config)
    : config_(config),
      num_vars_(f.num_vars),
      heap_(activity_),
      ema_fast_(config.ema_fast_alpha),
      ema_slow_(config.ema_slow_alpha) {
  const auto nv = static_cast<std::size_t>(num_vars_);
  watches_.resize(2 * nv);
  values_.assign(2 * nv, 0);
  level_.assign(nv + 1, 0);
  reason_.assign(nv + 1, kNoReason);
  phase_.assign(nv + 1, 0);
  activity_.assign(nv + 1, 0.0);
  seen_.assign(nv + 1, 0);
  glue_counts_.assign(nv, 0);
  lbd_stamp_.assign(nv + 1, 0);
  heap_.resize(num_vars_);
  for (int v = 1; v <= num_vars_; ++v) heap_.insert(v);
  next_reduce_ = config_.reduce_base;

  for (const Clause& input : f.clauses) {
    StoredClause c;
    c.literals = input.literals;
    for (Literal l : c.literals) {
      if (l.var() < 1 || l.var() > num_vars_) throw Error("solver: literal out of range");
    }
    if (!normalize_clause(c.literals)) continue;
    const auto ref = static_cast<ClauseRef>(clauses_.size());
    clauses_.push_back(std::move(c));
    originals_.push_back(ref);
    const auto& lits = clauses_[ref].literals;
    if (lits.empty()) {
      consistent_ = false;
    } else if (lits.size() == 1) {
      if (value(lits[0]) < 0) {
        consistent_ = false;
      } else if (value(lits[0]) == 0) {
        assign(lits[0], kNoReason);
      }
    } else {
      attach(ref);
    }
  }
}

std::optional<int> Solver::clause_glue(ClauseRef ref) const {
  if (!clauses_[ref].learnt) return std::nullopt;
  return clauses_[ref].glue;
}

void Solver::attach(ClauseRef ref) {
  const auto& lits = clauses_[ref].literals;
  watches_[lits[0].code()].push_back({ref, lits[1]});
  watches_[lits[1].code()].push_back({ref, lits[0]});
}

void Solver::assign(Literal lit, ClauseRef reason) {
  values_[lit.code()] = 1;
  values_[(~lit).code()] = -1;
  level_[lit.var()] = decision_level();
  reason_[lit.var()] = reason;
  trail_.push_back(lit);
}

void Solver::decide(Literal lit) {
  if (value(lit) != 0) throw Error("decide: literal already assigned");
  trail_lim_.push_back(trail_.size());
  assign(lit, kNoReason);
}

std::optional<ClauseRef> Solver::propagate() {
  while (queue_head_ < trail_.size()) {
    const Literal p = trail_[queue_head_++];
    ++stats_.propagations;
    const Literal false_lit = ~p;
    auto& ws = watches_[false_lit.code()];
    std::size_t i = 0;
    std::size_t j = 0;
    const std::size_t n = ws.size();
    while (i < n) {
      const Watch w = ws[i++];
      if (value(w.blocker) > 0) {
        ws[j++] = w;
        continue;
      }
      auto& lits = clauses_[w.ref].literals;
      if (lits[0] == false_lit) std::swap(lits[0], lits[1]);
      const Literal first = lits[0];
      if (first != w.blocker && value(first) > 0) {
        ws[j++] = {w.ref, first};
        continue;
      }
      bool moved = false;
      for (std::size_t k = 2; k < lits.size(); ++k) {
        if (value(lits[k]) >= 0) {
          std::swap(lits[1], lits[k]);
          watches_[lits[1].code()].push_back({w.ref, first});
          moved = true;
          break;
        }
      }
      if (moved) continue;
      ws[j++] = {w.ref, first};
      if (value(first) < 0) {
        while (i < n) ws[j++] = ws[i++];
        ws.resize(j);
        queue_head_ = trail_.size();
        return w.ref;
      }
      assign(first, w.ref);
    }
    ws.resize(j);
  }
  return std::nullopt;
}

void Solver::backtrack(int target) {
  if (decision_level() <= target) return;
  const std::size_t keep = trail_lim_[target];
  for (std::size_t i = trail_.size(); i-- > keep;) {
    const Literal l = trail_[i];
    const int v = l.var();
    values_[l.code()] = 0;
    values_[(~l).code()] = 0;
    reason_[v] = kNoReason;
    phase_[v] = l.positive();
    heap_.insert(v);
  }
  trail_.resize(keep);
  trail_lim_.resize(static_cast<std::size_t>(target));
  queue_head_ = trail_.size();
}

int Solver::compute_lbd(std::span<const Literal> clause) const {
  ++lbd_epoch_;
  int distinct = 0;
  for (Literal l : clause) {
    if (value(l) == 0) throw std::logic_error("compute_lbd: unassigned literal");
    auto& stamp = lbd_stamp_[level_[l.var()]];
    if (stamp != lbd_epoch_) {
      stamp = lbd_epoch_;
      ++distinct;
    }
  }
  return distinct;
}

bool Solver::redundant(Literal lit, std::uint32_t abstract_levels,
                       std::vector<int>& to_clear) {
  std::vector<Literal> stack{lit};
  const std::size_t top = to_clear.size();
  while (!stack.empty()) {
    const Literal q = stack.back();
    stack.pop_back();
    const auto& lits = clauses_[reason_[q.var()]].literals;
    for (std::size_t i = 1; i < lits.size(); ++i) {
      const Literal l = lits[i];
      const int v = l.var();
      if (seen_[v] || level_[v] == 0) continue;
      if (reason_[v] != kNoReason && (abstract_level(v) & abstract_levels) != 0) {
        seen_[v] = 1;
        stack.push_back(l);
        to_clear.push_back(v);
      } else {
        for (std::size_t k = top; k < to_clear.size(); ++k) seen_[to_clear[k]] = 0;
        to_clear.resize(top);
        return false;
      }
    }
  }
  return true;
}

ConflictAnalysis Solver::analyze_conflict(ClauseRef conflict) {
  if (decision_level() == 0) throw Error("analyze_conflict: conflict at level 0");
  ConflictAnalysis out;
  auto& learned = out.learned;
  learned.emplace_back();  // asserting literal goes here

  int open = 0;
  bool have_pivot = false;
  Literal pivot;
  std::size_t index = trail_.size();
  ClauseRef ref = conflict;
  do {
    const auto& lits = clauses_[ref].literals;
    for (std::size_t j = have_pivot ? 1 : 0; j < lits.size(); ++j) {
      const Literal q = lits[j];
      const int v = q.var();
      if (seen_[v] || level_[v] == 0) continue;
      bump(v);
      seen_[v] = 1;
      if (level_[v] >= decision_level()) {
        ++open;
      } else {
        learned.push_back(q);
      }
    }
    do {
      --index;
    } while (!seen_[trail_[index].var()]);
    pivot = trail_[index];
    have_pivot = true;
    ref = reason_[pivot.var()];
    seen_[pivot.var()] = 0;
    --open;
  } while (open > 0);
  learned[0] = ~pivot;

  // Recursive minimization of the non-UIP literals.
  std::vector<int> to_clear;
  to_clear.reserve(learned.size());
  for (std::size_t i = 1; i < learned.size(); ++i) to_clear.push_back(learned[i].var());
  std::uint32_t abstract_levels = 0;
  for (std::size_t i = 1; i < learned.size(); ++i) {
    abstract_levels |= abstract_level(learned[i].var());
  }
  std::size_t kept = 1;
  for (std::size_t i = 1; i < learned.size(); ++i) {
    const int v = learned[i].var();
    if (reason_[v] == kNoReason || !redundant(learned[i], abstract_levels, to_clear)) {
      learned[kept++] = learned[i];
    }
  }
  learned.resize(kept);
  for (int v : to_clear) seen_[v] = 0;

  if (learned.size() > 1) {
    std::size_t max_i = 1;
    for (std::size_t i = 2; i < learned.size(); ++i) {
      if (level_[learned[i].var()] > level_[learned[max_i].var()]) max_i = i;
    }
    std::swap(learned[1], learned[max_i]);
    out.backjump_level = level_[learned[1].var()];
  }
  out.glue = compute_lbd(learned);
  return out;
}

void Solver::learn(const ConflictAnalysis& analysis) {
  const auto& lits = analysis.learned;
  backtrack(analysis.backjump_level);
  ++stats_.learned;
  stats_.glue_sum += static_cast<std::uint64_t>(analysis.glue);
  if (analysis.glue <= 2) {
    for (Literal l : lits) ++glue_counts_[l.var() - 1];
  }
  update_glue_emas(analysis.glue);
  if (lits.size() == 1) {
    learned_units_.push_back(lits[0]);
    assign(lits[0], kNoReason);
    return;
  }
  const auto ref = static_cast<ClauseRef>(clauses_.size());
  clauses_.push_back(StoredClause{lits, analysis.glue, true, false});
  attach(ref);
  learned_.push_back(ref);
  assign(lits[0], ref);
}

void Solver::bump(int var) {
  activity_[var] += bump_increment_;
  if (activity_[var] > kRescaleLimit) {
    for (double& a : activity_) a *= kRescaleFactor;
    bump_increment_ *= kRescaleFactor;
  }
  heap_.increased(var);
}

void Solver::decay() { bump_increment_ /= config_.decay; }

void Solver::set_activity(int var, double score) {
  activity_[var] = score;
  std::vector<int> vars;
  for (int v = 1; v <= num_vars_; ++v) {
    if (!assigned(v)) vars.push_back(v);
  }
  heap_.rebuild(vars);
}

std::optional<Literal> Solver::pick_decision() {
  while (!heap_.empty()) {
    const int v = heap_.top();
    if (assigned(v)) {
      heap_.pop();
      continue;
    }
    return Literal(v, phase_[v] != 0);
  }
  return std::nullopt;
}

void Solver::update_glue_emas(int glue) {
  ema_fast_.update(glue);
  ema_slow_.update(glue);
}

bool Solver::should_restart() const {
  if (decision_level() == 0) return false;
  if (stats_.conflicts - last_restart_conflicts_ <
      static_cast<std::uint64_t>(config_.restart_interval)) {
    return false;
  }
  return ema_fast() > config_.restart_margin * ema_slow();
}

bool Solver::locked(ClauseRef ref) const {
  const Literal first = clauses_[ref].literals[0];
  return value(first) > 0 && reason_[first.var()] == ref;
}

void Solver::reduce_db() {
  ++stats_.reductions;
  next_reduce_ = stats_.conflicts + config_.reduce_base +
                 config_.reduce_increment * stats_.reductions;

  std::vector<ClauseRef> candidates;
  for (ClauseRef ref : learned_) {
    if (clauses_[ref].glue > 2 && !locked(ref)) candidates.push_back(ref);
  }
  // Best first: low glue, then most recent.
  std::sort(candidates.begin(), candidates.end(), [&](ClauseRef a, ClauseRef b) {
    if (clauses_[a].glue != clauses_[b].glue) return clauses_[a].glue < clauses_[b].glue;
    return a > b;
  });
  const std::size_t drop = candidates.size() / 2;
  if (drop == 0) return;
  for (std::size_t i = candidates.size() - drop; i < candidates.size(); ++i) {
    auto& c = clauses_[candidates[i]];
    c.deleted = true;
    c.literals.clear();
    c.literals.shrink_to_fit();
  }
  std::erase_if(learned_, [&](ClauseRef r) { return clauses_[r].deleted; });
  for (auto& ws : watches_) {
    std::erase_if(ws, [&](const Watch& w) { return clauses_[w.ref].deleted; });
  }
}

bool Solver::should_refocus(std::chrono::steady_clock::time_point now) const {
  const auto& rc = config_.refocus;
  if (rc.warmup_mode == WarmupMode::kConflicts) {
    if (stats_.conflicts < rc.warmup_conflicts) return false;
  } else {
    if (!started_) return false;
    const std::chrono::duration<double> elapsed = now - *started_;
    if (elapsed.count() < rc.warmup_seconds) return false;
  }
  const auto since = static_cast<std::int64_t>(stats_.conflicts - last_refocus_conflicts_);
  if (since < rc.schedule.threshold(static_cast<std::int64_t>(stats_.refocuses) + 1)) {
    return false;
  }
  return ema_fast() > rc.ema_ratio * ema_slow();
}

void Solver::apply_refocus(std::span<const double> probs, int graph_vars) {
  if (static_cast<int>(probs.size()) != num_vars_) {
    throw Error("apply_refocus: distribution size does not match variable count");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error("apply_refocus: invalid probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) throw Error("apply_refocus: distribution not normalized");
  const double scale = static_cast<double>(graph_vars) * config_.refocus.kappa;
  std::vector<int> free_vars;
  for (int v = 1; v <= num_vars_; ++v) {
    if (assigned(v)) {
      activity_[v] = 0.0;
    } else {
      activity_[v] = probs[v - 1] * scale;
      free_vars.push_back(v);
    }
  }
  activity_[0] = 0.0;
  bump_increment_ = 1.0;
  heap_.rebuild(free_vars);
  ++stats_.refocuses;
}

void Solver::refocus(const RefocusOracle& oracle) {
  last_refocus_conflicts_ = stats_.conflicts;
  auto graph = extract_graph(*this, config_.refocus.edge_cap);
  if (!graph || graph->num_vars == 0) {
    ++stats_.refocus_skips;
    return;
  }
  const auto logits = oracle(*graph);
  if (static_cast<int>(logits.size()) != graph->num_vars) {
    throw Error("refocus oracle returned the wrong number of logits");
  }
  const auto probs = policy_distribution(logits, config_.refocus.temperature);
  const auto lifted = lift_distribution(probs, graph->var_map, num_vars_);
  apply_refocus(lifted, graph->num_vars);
}

bool Solver::budget_exhausted(const Budget& budget, std::uint64_t start_conflicts,
                              std::uint64_t start_decisions,
                              std::chrono::steady_clock::time_point start) const {
  if (budget.conflicts && stats_.conflicts - start_conflicts >= *budget.conflicts) return true;
  if (budget.decisions && stats_.decisions - start_decisions >= *budget.decisions) return true;
  if (budget.seconds) {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    if (elapsed.count() >= *budget.seconds) return true;
  }
  return false;
}

SolveResult Solver::solve(const Budget& budget, const RefocusOracle* oracle) {
  const auto start = std::chrono::steady_clock::now();
  if (!started_) started_ = start;
  const std::uint64_t start_conflicts = stats_.conflicts;
  const std::uint64_t start_decisions = stats_.decisions;

  SolveResult result;
  result.status = Status::kUnknown;
  if (!consistent_) {
    result.status = Status::kUnsat;
  } else {
    while (true) {
      if (const auto conflict = propagate()) {
        ++stats_.conflicts;
        if (decision_level() == 0) {
          consistent_ = false;
          result.status = Status::kUnsat;
          break;
        }
        learn(analyze_conflict(*conflict));
        decay();
        if (should_restart()) {
          backtrack(0);
          ++stats_.restarts;
          last_restart_conflicts_ = stats_.conflicts;
        }
        if (budget_exhausted(budget, start_conflicts, start_decisions, start)) break;
        continue;
      }
      if (budget_exhausted(budget, start_conflicts, start_decisions, start)) break;
      if (stats_.conflicts >= next_reduce_) reduce_db();
      if (oracle != nullptr && should_refocus(std::chrono::steady_clock::now())) {
        refocus(*oracle);
      }
      const auto next = pick_decision();
      if (!next) {
        result.status = Status::kSat;
        result.model.resize(static_cast<std::size_t>(num_vars_));
        for (int v = 1; v <= num_vars_; ++v) {
          result.model[v - 1] = value(Literal(v, true)) > 0;
        }
        break;
      }
      ++stats_.decisions;
      if (config_.on_decision) config_.on_decision(*this, *next);
      decide(*next);
    }
  }
  if (result.status == Status::kSat) {
    for (ClauseRef ref : originals_) {
      bool sat = false;
      for (Literal l : clauses_[ref].literals) sat |= result.model[l.var() - 1] == l.positive();
      if (!sat) throw std::logic_error("solver produced a model that violates an input clause");
    }
  }
  if (consistent_) backtrack(0);

  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  stats_.seconds += elapsed.count();
  result.stats = stats_;
  result.glue_counts = glue_counts_;
  return result;
}

Formula Solver::snapshot_formula() const {
  Formula f;
  f.num_vars = num_vars_;
  for (ClauseRef ref : originals_) f.clauses.push_back(Clause{clauses_[ref].literals, std::nullopt});
  for (Literal unit : learned_units_) f.clauses.push_back(Clause{{unit}, 1});
  for (ClauseRef ref : learned_) {
    f.clauses.push_back(Clause{clauses_[ref].literals, clauses_[ref].glue});
  }
  return f;
}

bool Solver::watches_consistent() const {
  auto watched_by = [&](Literal l, ClauseRef ref) {
    const auto& ws = watches_[l.code()];
    return std::any_of(ws.begin(), ws.end(), [&](const Watch& w) { return w.ref == ref; });
  };
  const bool at_fixpoint = queue_head_ == trail_.size();
  for (ClauseRef ref = 0; ref < clauses_.size(); ++ref) {
    const auto& c = clauses_[ref];
    if (c.deleted || c.literals.size() < 2) continue;
    if (!watched_by(c.literals[0], ref) || !watched_by(c.literals[1], ref)) return false;
    if (!at_fixpoint) continue;
    bool satisfied = false;
    for (Literal l : c.literals) satisfied |= value(l) > 0;
    if (!satisfied && (value(c.literals[0]) < 0 || value(c.literals[1]) < 0)) return false;
  }
  return true;
}

}  // namespace neuroglue
