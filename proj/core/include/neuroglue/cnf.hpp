#pragma once

#include <cstdint>
#include <cstdlib>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace neuroglue {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A variable (1-based) with a polarity. Encoded as 2*(var-1) + (negative),
// which is also the index used for per-literal solver tables.
class Literal {
 public:
  constexpr Literal() = default;
  constexpr Literal(int var, bool positive)
      : code_(2 * static_cast<std::uint32_t>(var - 1) + (positive ? 0u : 1u)) {}

  static constexpr Literal from_code(std::uint32_t code) {
    Literal l;
    l.code_ = code;
    return l;
  }
  static Literal from_dimacs(int value) {
    return Literal(value > 0 ? value : -value, value > 0);
  }

  constexpr int var() const { return static_cast<int>(code_ >> 1) + 1; }
  constexpr bool positive() const { return (code_ & 1u) == 0; }
  constexpr std::uint32_t code() const { return code_; }
  constexpr int to_dimacs() const { return positive() ? var() : -var(); }

  constexpr Literal operator~() const { return from_code(code_ ^ 1u); }
  constexpr auto operator<=>(const Literal&) const = default;

 private:
  std::uint32_t code_ = 0;
};

struct Clause {
  std::vector<Literal> literals;
  std::optional<int> glue;

  bool operator==(const Clause&) const = default;
};

struct Formula {
  int num_vars = 0;
  std::vector<Clause> clauses;

  bool operator==(const Formula&) const = default;

  // Appends a clause given as DIMACS integers, without normalization.
  void add_clause(std::initializer_list<int> dimacs);
  std::size_t num_literal_occurrences() const;
};

// Dedups literals in place; returns false if the clause is a tautology.
bool normalize_clause(std::vector<Literal>& literals);

// Column of a literal in the M x 2N clause-literal adjacency: positive
// literals occupy 0..N-1, negative literals N..2N-1.
inline int graph_column(Literal lit, int num_vars) {
  return lit.positive() ? lit.var() - 1 : num_vars + lit.var() - 1;
}

struct Edge {
  int row = 0;
  int col = 0;
  bool operator==(const Edge&) const = default;
};

struct SparseGraph {
  int num_clauses = 0;
  int num_vars = 0;
  std::vector<Edge> edges;
  // var_map[i] is the original variable of compacted variable i+1.
  std::vector<int> var_map;

  bool operator==(const SparseGraph&) const = default;

  // Throws Error if indices are out of range or an edge is duplicated.
  void validate() const;
};

// DIMACS CNF.
Formula parse_dimacs(std::istream& in);
Formula parse_dimacs(std::string_view text);
Formula read_dimacs_file(const std::string& path);
void write_dimacs(std::ostream& out, const Formula& f);
std::string to_dimacs(const Formula& f);
void write_dimacs_file(const std::string& path, const Formula& f);

SparseGraph clause_literal_graph(const Formula& f);

// Uniform random k-SAT: k distinct variables per clause, uniform polarity.
Formula random_ksat(int num_vars, int num_clauses, int width,
                    std::uint64_t seed);

struct BruteForceResult {
  bool satisfiable = false;
  std::vector<bool> model;  // index v-1; set only when satisfiable
};

inline constexpr int kBruteForceMaxVars = 26;
BruteForceResult brute_force(const Formula& f);

bool satisfies(const Formula& f, const std::vector<bool>& model);

struct Subproblem {
  Formula formula;
  // Literals (original numbering) assigned on the path to this subproblem,
  // including those forced by propagation.
  std::vector<Literal> assignment;
  // var_map[i] is the original variable of compacted variable i+1.
  std::vector<int> var_map;
};

struct SplitResult {
  std::vector<Subproblem> subproblems;
  std::size_t discarded_sat = 0;
  std::size_t discarded_unsat = 0;
};

// Splits f by branching on random variables until every piece has at most
// max_clauses clauses. Both polarities of each branch variable are explored.
SplitResult random_split(const Formula& f, std::size_t max_clauses,
                         std::uint64_t seed);

}  // namespace neuroglue
