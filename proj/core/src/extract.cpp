#include "neuroglue/extract.hpp"

#include <stdexcept>

#include "neuroglue/solver.hpp"

namespace neuroglue {

std::optional<SparseGraph> extract_graph(const Solver& solver, std::size_t edge_cap) {
  const int n = solver.num_vars();
  std::vector<int> compact(static_cast<std::size_t>(n) + 1, 0);
  SparseGraph g;
  for (int v = 1; v <= n; ++v) {
    if (!solver.assigned(v)) {
      g.var_map.push_back(v);
      compact[v] = static_cast<int>(g.var_map.size());
    }
  }
  g.num_vars = static_cast<int>(g.var_map.size());

  std::vector<Literal> residual;
  // Returns false if the clause did not fit under the cap.
  auto emit = [&](ClauseRef ref) {
    residual.clear();
    for (Literal l : solver.clause(ref)) {
      const int val = solver.value(l);
      if (val > 0) return true;  // satisfied
      if (val == 0) residual.push_back(l);
    }
    if (residual.size() < 2) {
      throw std::logic_error("extract_graph: unit or empty residual clause at fixpoint");
    }
    if (g.edges.size() + residual.size() > edge_cap) return false;
    for (Literal l : residual) {
      g.edges.push_back({g.num_clauses,
                         graph_column(Literal(compact[l.var()], l.positive()), g.num_vars)});
    }
    ++g.num_clauses;
    return true;
  };

  for (ClauseRef ref : solver.original_clauses()) {
    if (!emit(ref)) return std::nullopt;
  }
  for (ClauseRef ref : solver.learned_clauses()) {
    if (!emit(ref)) break;
  }
  return g;
}

std::vector<double> lift_distribution(std::span<const double> probs,
                                      const std::vector<int>& var_map, int num_vars) {
  if (probs.size() != var_map.size()) {
    throw Error("lift_distribution: probability vector does not match var_map");
  }
  std::vector<double> lifted(static_cast<std::size_t>(num_vars), 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const int v = var_map[i];
    if (v < 1 || v > num_vars) throw Error("lift_distribution: var_map entry out of range");
    lifted[v - 1] += probs[i];
  }
  return lifted;
}

}  // namespace neuroglue
