#include <optional>

#include "neuroglue/cnf.hpp"
#include "neuroglue/rng.hpp"

namespace neuroglue {

namespace {

enum class Simplified { kOpen, kSatisfied, kConflict };

struct Reduction {
  Simplified status = Simplified::kOpen;
  Formula formula;
  std::vector<Literal> forced;  // in the input formula's numbering
  std::vector<int> var_map;     // compacted -> input numbering
};

// Assigns `decision`, unit-propagates with occurrence counters and returns
// the compacted residual formula.
Reduction assign_and_simplify(const Formula& f, Literal decision) {
  const auto num_lits = static_cast<std::size_t>(2 * f.num_vars);
  std::vector<std::vector<int>> occurs(num_lits);
  for (int i = 0; i < static_cast<int>(f.clauses.size()); ++i) {
    for (Literal l : f.clauses[i].literals) occurs[l.code()].push_back(i);
  }
  std::vector<int> open_count(f.clauses.size());
  std::vector<char> satisfied(f.clauses.size(), 0);
  for (std::size_t i = 0; i < f.clauses.size(); ++i) {
    open_count[i] = static_cast<int>(f.clauses[i].literals.size());
  }
  // 0 unassigned, 1 true, -1 false, indexed by literal code
  std::vector<signed char> value(num_lits, 0);

  Reduction r;
  std::vector<Literal> queue{decision};
  value[decision.code()] = 1;
  value[(~decision).code()] = -1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    Literal lit = queue[head];
    r.forced.push_back(lit);
    for (int ci : occurs[lit.code()]) satisfied[ci] = 1;
    for (int ci : occurs[(~lit).code()]) {
      if (satisfied[ci]) continue;
      if (--open_count[ci] == 0) {
        r.status = Simplified::kConflict;
        return r;
      }
      if (open_count[ci] == 1) {
        for (Literal other : f.clauses[ci].literals) {
          if (value[other.code()] == 0) {
            value[other.code()] = 1;
            value[(~other).code()] = -1;
            queue.push_back(other);
            break;
          }
        }
        // The unit may already be true from an earlier enqueue in this loop.
      }
    }
  }

  std::vector<int> compact(static_cast<std::size_t>(f.num_vars) + 1, 0);
  for (std::size_t ci = 0; ci < f.clauses.size(); ++ci) {
    if (satisfied[ci]) continue;
    Clause c;
    for (Literal l : f.clauses[ci].literals) {
      if (value[l.code()] != 0) continue;
      int& id = compact[l.var()];
      if (id == 0) {
        r.var_map.push_back(l.var());
        id = static_cast<int>(r.var_map.size());
      }
      c.literals.emplace_back(id, l.positive());
    }
    r.formula.clauses.push_back(std::move(c));
  }
  r.formula.num_vars = static_cast<int>(r.var_map.size());
  if (r.formula.clauses.empty()) r.status = Simplified::kSatisfied;
  return r;
}

}  // namespace

SplitResult random_split(const Formula& f, std::size_t max_clauses,
                         std::uint64_t seed) {
  if (max_clauses < 1) throw Error("random_split: max_clauses must be >= 1");
  SplitResult result;
  Subproblem root{f, {}, {}};
  root.var_map.resize(f.num_vars);
  for (int v = 0; v < f.num_vars; ++v) root.var_map[v] = v + 1;
  if (f.clauses.size() <= max_clauses) {
    result.subproblems.push_back(std::move(root));
    return result;
  }

  Rng rng(seed);
  std::vector<Subproblem> stack;
  stack.push_back(std::move(root));
  while (!stack.empty()) {
    Subproblem node = std::move(stack.back());
    stack.pop_back();
    bool has_empty = false;
    for (const auto& c : node.formula.clauses) has_empty |= c.literals.empty();
    if (has_empty) {
      ++result.discarded_unsat;
      continue;
    }
    if (node.formula.clauses.size() <= max_clauses) {
      result.subproblems.push_back(std::move(node));
      continue;
    }
    const int var = 1 + static_cast<int>(rng.below(
                            static_cast<std::uint64_t>(node.formula.num_vars)));
    const bool first = rng.coin();
    // Push the second branch first so the first polarity is explored first.
    for (bool polarity : {!first, first}) {
      Reduction red = assign_and_simplify(node.formula, Literal(var, polarity));
      if (red.status == Simplified::kConflict) {
        ++result.discarded_unsat;
        continue;
      }
      if (red.status == Simplified::kSatisfied) {
        ++result.discarded_sat;
        continue;
      }
      Subproblem child;
      child.formula = std::move(red.formula);
      child.assignment = node.assignment;
      for (Literal l : red.forced) {
        child.assignment.emplace_back(node.var_map[l.var() - 1], l.positive());
      }
      child.var_map.reserve(red.var_map.size());
      for (int v : red.var_map) child.var_map.push_back(node.var_map[v - 1]);
      stack.push_back(std::move(child));
    }
  }
  return result;
}

}  // namespace neuroglue
