#include <doctest.h>

#include <set>
#include <sstream>

#include "neuroglue/cnf.hpp"
#include "neuroglue/solver.hpp"
#include "oracles.hpp"

using namespace neuroglue;

namespace {

std::vector<std::vector<int>> rows(const Formula& f) { return oracle::as_ints(f); }

std::set<std::pair<int, int>> edge_set(const SparseGraph& g) {
  std::set<std::pair<int, int>> s;
  for (auto e : g.edges) s.emplace(e.row, e.col);
  return s;
}

}  // namespace

TEST_CASE("literal encoding") {
  const Literal a(3, true);
  CHECK(a.var() == 3);
  CHECK(a.positive());
  CHECK((~a).to_dimacs() == -3);
  CHECK(~~a == a);
  CHECK(Literal::from_dimacs(-7).var() == 7);
  CHECK_FALSE(Literal::from_dimacs(-7).positive());
}

TEST_CASE("parse_dimacs examples") {
  const auto f = parse_dimacs("p cnf 2 2\n1 2 0\n-1 0\n");
  CHECK(f.num_vars == 2);
  CHECK(rows(f) == std::vector<std::vector<int>>{{1, 2}, {-1}});

  const auto t = parse_dimacs("p cnf 1 1\n1 -1 0\n");
  CHECK(t.num_vars == 1);
  CHECK(t.clauses.empty());

  CHECK_THROWS_WITH_AS(parse_dimacs("p cnf 3 1\n4 0\n"), "line 2: literal out of range",
                       ParseError);
}

TEST_CASE("parse_dimacs details") {
  SUBCASE("comments, duplicates and clauses spanning lines") {
    const auto f = parse_dimacs("c hello\np cnf 3 2\n1 1 -2\n 0 3\nc mid\n-3 3 0 2 0\n");
    CHECK(rows(f) == std::vector<std::vector<int>>{{1, -2}, {2}});
  }
  SUBCASE("empty clause is kept") {
    const auto f = parse_dimacs("p cnf 1 1\n0\n");
    REQUIRE(f.clauses.size() == 1);
    CHECK(f.clauses[0].literals.empty());
  }
  SUBCASE("errors carry line numbers") {
    try {
      parse_dimacs("p cnf 2 1\n1\n2 x 0\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_dimacs("p cnf two 1\n"), ParseError);
    CHECK_THROWS_AS(parse_dimacs("p cnf 2\n"), ParseError);
    CHECK_THROWS_AS(parse_dimacs("1 2 0\n"), ParseError);
    CHECK_THROWS_WITH_AS(parse_dimacs("p cnf 2 1\n1 2\n"), "line 2: missing terminating 0",
                         ParseError);
    CHECK_THROWS_AS(parse_dimacs(""), ParseError);
  }
}

TEST_CASE("write_dimacs examples") {
  Formula f;
  f.num_vars = 1;
  f.add_clause({1});
  CHECK(to_dimacs(f) == "p cnf 1 1\n1 0\n");
  CHECK(to_dimacs(Formula{}) == "p cnf 0 0\n");
}

TEST_CASE("DIMACS round trip on random formulas") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto f = random_ksat(30, 120, 3, seed);
    CHECK(parse_dimacs(to_dimacs(f)) == f);
  }
}

TEST_CASE("clause_literal_graph examples") {
  Formula a;
  a.num_vars = 2;
  a.add_clause({1, -2});
  const auto ga = clause_literal_graph(a);
  CHECK(edge_set(ga) == std::set<std::pair<int, int>>{{0, 0}, {0, 3}});
  CHECK(ga.var_map == std::vector<int>{1, 2});

  Formula b;
  b.num_vars = 1;
  b.add_clause({1});
  b.add_clause({-1});
  CHECK(edge_set(clause_literal_graph(b)) == std::set<std::pair<int, int>>{{0, 0}, {1, 1}});

  const auto f = random_ksat(40, 170, 3, 9);
  const auto g = clause_literal_graph(f);
  CHECK(g.edges.size() == 3 * 170);
  CHECK(g.num_clauses == 170);
  g.validate();
  // Every edge must point at a literal that really occurs in its clause.
  for (auto e : g.edges) {
    bool found = false;
    for (auto l : f.clauses[e.row].literals) found |= graph_column(l, 40) == e.col;
    CHECK(found);
  }
}

TEST_CASE("SparseGraph::validate rejects bad graphs") {
  SparseGraph g;
  g.num_clauses = 1;
  g.num_vars = 1;
  g.var_map = {1};
  g.edges = {{0, 2}};
  CHECK_THROWS_AS(g.validate(), Error);
  g.edges = {{0, 1}, {0, 1}};
  CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("random_ksat contract") {
  CHECK(random_ksat(5, 10, 3, 1) == random_ksat(5, 10, 3, 1));
  CHECK_FALSE(random_ksat(5, 10, 3, 1) == random_ksat(5, 10, 3, 2));
  const auto f = random_ksat(5, 10, 3, 1);
  CHECK(f.clauses.size() == 10);
  for (const auto& c : f.clauses) {
    std::vector<int> vars;
    for (auto l : c.literals) vars.push_back(l.var());
    CHECK(oracle::distinct_count(vars) == 3);
  }
  CHECK_THROWS_AS(random_ksat(2, 1, 3, 1), Error);
}

TEST_CASE("random 3-SAT at the threshold is satisfiable about half the time") {
  const int n = 150;
  const int m = 639;  // ceil(4.26 * 150)
  int sat = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Solver s(random_ksat(n, m, 3, seed));
    const auto r = s.solve();
    REQUIRE(r.status != Status::kUnknown);
    sat += r.status == Status::kSat;
  }
  CHECK(sat > 60);
  CHECK(sat < 140);
}

TEST_CASE("brute_force examples") {
  Formula f;
  f.num_vars = 1;
  f.add_clause({1});
  f.add_clause({-1});
  CHECK_FALSE(brute_force(f).satisfiable);

  Formula g;
  g.num_vars = 2;
  g.add_clause({1, 2});
  const auto r = brute_force(g);
  CHECK(r.satisfiable);
  CHECK(satisfies(g, r.model));

  Formula big;
  big.num_vars = kBruteForceMaxVars + 1;
  CHECK_THROWS_AS(brute_force(big), Error);
}

TEST_CASE("brute_force agrees with the independent oracle and the CDCL solver") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto f = random_ksat(12, 50, 3, seed);
    const auto bf = brute_force(f);
    if (seed < 200) CHECK(bf.satisfiable == oracle::exhaustive_sat(rows(f), 12));
    if (bf.satisfiable) CHECK(satisfies(f, bf.model));
    Solver s(f);
    CHECK((s.solve().status == Status::kSat) == bf.satisfiable);
  }
}

TEST_CASE("random_split passthrough below the threshold") {
  const auto f = random_ksat(30, 100, 3, 4);
  const auto r = random_split(f, 150000, 1);
  REQUIRE(r.subproblems.size() == 1);
  CHECK(r.subproblems[0].formula == f);
  CHECK(r.subproblems[0].assignment.empty());
  CHECK_THROWS_AS(random_split(f, 0, 1), Error);
}

TEST_CASE("random_split pieces are small, compact and sound") {
  int sat_sources = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto f = random_ksat(18, 76, 3, 100 + seed);
    const auto r = random_split(f, 30, seed);
    const bool f_sat = brute_force(f).satisfiable;
    bool any_sat = false;
    for (const auto& sub : r.subproblems) {
      CHECK(sub.formula.clauses.size() <= 30);
      CHECK(static_cast<int>(sub.var_map.size()) == sub.formula.num_vars);
      // compacted: every variable occurs
      std::set<int> used;
      for (const auto& c : sub.formula.clauses) {
        CHECK_FALSE(c.literals.empty());
        for (auto l : c.literals) used.insert(l.var());
      }
      CHECK(static_cast<int>(used.size()) == sub.formula.num_vars);

      const auto piece = brute_force(sub.formula);
      if (!piece.satisfiable) continue;
      any_sat = true;
      // Lift the piece's model together with the recorded assignment.
      std::vector<bool> model(18, false);
      for (auto l : sub.assignment) model[l.var() - 1] = l.positive();
      for (int i = 0; i < sub.formula.num_vars; ++i) model[sub.var_map[i] - 1] = piece.model[i];
      CHECK(satisfies(f, model));
    }
    // A satisfiable formula keeps a satisfiable piece unless a branch was
    // itself discarded as already satisfied.
    if (f_sat && r.discarded_sat == 0) CHECK(any_sat);
    if (!f_sat) CHECK_FALSE(any_sat);
    sat_sources += f_sat;
  }
  CHECK(sat_sources > 0);
}
