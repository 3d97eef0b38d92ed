#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "neuroglue/cnf.hpp"

namespace neuroglue {

class Solver;

// Clause-literal graph of the residual formula under the solver's current
// assignment. Unassigned variables are renumbered densely (in increasing
// original order) and recorded in var_map. Original clauses are traversed
// before learned clauses; traversal stops before the clause that would push
// the edge count past edge_cap. Returns nullopt when the original clauses
// alone exceed the cap.
//
// Requires propagation to be at fixpoint without conflict.
std::optional<SparseGraph> extract_graph(const Solver& solver, std::size_t edge_cap);

// Maps a distribution over compacted variables back to original variables
// (index v-1); variables absent from var_map receive 0.
std::vector<double> lift_distribution(std::span<const double> probs,
                                      const std::vector<int>& var_map, int num_vars);

}  // namespace neuroglue
