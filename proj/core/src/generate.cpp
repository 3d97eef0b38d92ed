#include <numeric>

#include "neuroglue/cnf.hpp"
#include "neuroglue/rng.hpp"

namespace neuroglue {

Formula random_ksat(int num_vars, int num_clauses, int width,
                    std::uint64_t seed) {
  if (width < 1 || width > num_vars) {
    throw Error("random_ksat: clause width must be in [1, num_vars]");
  }
  if (num_clauses < 0) throw Error("random_ksat: negative clause count");
  Rng rng(seed);
  Formula f;
  f.num_vars = num_vars;
  f.clauses.reserve(static_cast<std::size_t>(num_clauses));
  std::vector<int> pool(static_cast<std::size_t>(num_vars));
  std::iota(pool.begin(), pool.end(), 1);
  for (int i = 0; i < num_clauses; ++i) {
    // Partial Fisher-Yates: the first `width` entries are a uniform sample.
    Clause c;
    c.literals.reserve(static_cast<std::size_t>(width));
    for (int j = 0; j < width; ++j) {
      auto k = j + static_cast<int>(rng.below(static_cast<std::uint64_t>(num_vars - j)));
      std::swap(pool[j], pool[k]);
      c.literals.emplace_back(pool[j], rng.coin());
    }
    f.clauses.push_back(std::move(c));
  }
  return f;
}

}  // namespace neuroglue
