#include "neuroglue/cnf.hpp"

namespace neuroglue {

bool satisfies(const Formula& f, const std::vector<bool>& model) {
  if (static_cast<int>(model.size()) < f.num_vars) return false;
  for (const auto& c : f.clauses) {
    bool sat = false;
    for (Literal l : c.literals) {
      if (model[l.var() - 1] == l.positive()) {
        sat = true;
        break;
      }
    }
    if (!sat) return false;
  }
  return true;
}

BruteForceResult brute_force(const Formula& f) {
  if (f.num_vars > kBruteForceMaxVars) {
    throw Error("brute_force: too many variables (" + std::to_string(f.num_vars) +
                " > " + std::to_string(kBruteForceMaxVars) + ")");
  }
  struct Masks {
    std::uint32_t pos = 0;
    std::uint32_t neg = 0;
  };
  std::vector<Masks> masks;
  masks.reserve(f.clauses.size());
  for (const auto& c : f.clauses) {
    Masks m;
    for (Literal l : c.literals) {
      (l.positive() ? m.pos : m.neg) |= 1u << (l.var() - 1);
    }
    masks.push_back(m);
  }
  const std::uint64_t total = 1ULL << f.num_vars;
  for (std::uint64_t a = 0; a < total; ++a) {
    const auto bits = static_cast<std::uint32_t>(a);
    bool ok = true;
    for (const Masks& m : masks) {
      if (((bits & m.pos) | (~bits & m.neg)) == 0) {
        ok = false;
        break;
      }
    }
    if (ok) {
      BruteForceResult r;
      r.satisfiable = true;
      r.model.resize(f.num_vars);
      for (int v = 0; v < f.num_vars; ++v) r.model[v] = (bits >> v) & 1u;
      return r;
    }
  }
  return {};
}

}  // namespace neuroglue
