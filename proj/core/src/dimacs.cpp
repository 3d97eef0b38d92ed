#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "neuroglue/cnf.hpp"

namespace neuroglue {

void Formula::add_clause(std::initializer_list<int> dimacs) {
  Clause c;
  for (int v : dimacs) c.literals.push_back(Literal::from_dimacs(v));
  clauses.push_back(std::move(c));
}

std::size_t Formula::num_literal_occurrences() const {
  std::size_t n = 0;
  for (const auto& c : clauses) n += c.literals.size();
  return n;
}

bool normalize_clause(std::vector<Literal>& literals) {
  // Keep first-occurrence order so that write/parse round-trips.
  std::vector<Literal> out;
  out.reserve(literals.size());
  for (Literal l : literals) {
    if (std::find(out.begin(), out.end(), ~l) != out.end()) return false;
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  }
  literals = std::move(out);
  return true;
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f';
}

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

bool parse_int(std::string_view token, long long& value) {
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

}  // namespace

Formula parse_dimacs(std::istream& in) {
  Formula f;
  bool have_header = false;
  std::vector<Literal> pending;
  bool in_clause = false;
  std::size_t line_no = 0;
  std::size_t clause_line = 0;
  std::string line;

  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (tokens[0] == "c" || tokens[0][0] == 'c') continue;
    if (tokens[0] == "%") break;  // SATLIB trailer
    if (tokens[0] == "p") {
      if (have_header) throw ParseError(line_no, "duplicate header");
      long long n = 0, m = 0;
      if (tokens.size() != 4 || tokens[1] != "cnf" || !parse_int(tokens[2], n) ||
          !parse_int(tokens[3], m) || n < 0 || m < 0 || n > (1LL << 30)) {
        throw ParseError(line_no, "malformed header");
      }
      f.num_vars = static_cast<int>(n);
      f.clauses.reserve(static_cast<std::size_t>(m));
      have_header = true;
      continue;
    }
    if (!have_header) throw ParseError(line_no, "clause before header");
    for (auto token : tokens) {
      long long v = 0;
      if (!parse_int(token, v)) {
        throw ParseError(line_no, "non-integer token '" + std::string(token) + "'");
      }
      if (v == 0) {
        if (normalize_clause(pending)) {
          f.clauses.push_back(Clause{std::move(pending), std::nullopt});
        }
        pending.clear();
        in_clause = false;
        continue;
      }
      if (v > f.num_vars || -v > f.num_vars) {
        throw ParseError(line_no, "literal out of range");
      }
      if (!in_clause) clause_line = line_no;
      in_clause = true;
      pending.push_back(Literal::from_dimacs(static_cast<int>(v)));
    }
  }
  if (!have_header) throw ParseError(line_no, "missing header");
  if (in_clause) throw ParseError(clause_line, "missing terminating 0");
  return f;
}

Formula parse_dimacs(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_dimacs(in);
}

Formula read_dimacs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_dimacs(in);
}

void write_dimacs(std::ostream& out, const Formula& f) {
  out << "p cnf " << f.num_vars << ' ' << f.clauses.size() << '\n';
  for (const auto& c : f.clauses) {
    for (Literal l : c.literals) out << l.to_dimacs() << ' ';
    out << "0\n";
  }
}

std::string to_dimacs(const Formula& f) {
  std::ostringstream out;
  write_dimacs(out, f);
  return out.str();
}

void write_dimacs_file(const std::string& path, const Formula& f) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_dimacs(out, f);
  if (!out) throw Error("write failed: " + path);
}

}  // namespace neuroglue
