#include <algorithm>

#include "neuroglue/cnf.hpp"

namespace neuroglue {

SparseGraph clause_literal_graph(const Formula& f) {
  SparseGraph g;
  g.num_clauses = static_cast<int>(f.clauses.size());
  g.num_vars = f.num_vars;
  g.edges.reserve(f.num_literal_occurrences());
  for (int row = 0; row < g.num_clauses; ++row) {
    for (Literal l : f.clauses[row].literals) {
      g.edges.push_back({row, graph_column(l, f.num_vars)});
    }
  }
  g.var_map.resize(f.num_vars);
  for (int v = 0; v < f.num_vars; ++v) g.var_map[v] = v + 1;
  return g;
}

void SparseGraph::validate() const {
  if (num_clauses < 0 || num_vars < 0) throw Error("graph: negative dimension");
  if (static_cast<int>(var_map.size()) != num_vars) {
    throw Error("graph: var_map size does not match num_vars");
  }
  std::vector<std::pair<int, int>> seen;
  seen.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.row < 0 || e.row >= num_clauses || e.col < 0 || e.col >= 2 * num_vars) {
      throw Error("graph: edge index out of range");
    }
    seen.emplace_back(e.row, e.col);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw Error("graph: duplicate edge");
  }
}

}  // namespace neuroglue
