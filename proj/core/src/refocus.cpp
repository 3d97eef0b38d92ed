#include "neuroglue/refocus.hpp"

#include <algorithm>
#include <cmath>

#include "neuroglue/cnf.hpp"

namespace neuroglue {

std::int64_t RefocusSchedule::threshold(std::int64_t ordinal) const {
  if (ordinal < 1) throw Error("schedule_threshold: ordinal must be >= 1");
  __extension__ using int128 = __int128;
  const int128 k = ordinal - 1;
  const int128 value = base + static_cast<int128>(quad) * k * k;
  return static_cast<std::int64_t>(std::min<int128>(value, cap));
}

std::vector<double> policy_distribution(std::span<const double> logits,
                                        double temperature) {
  if (logits.empty()) throw Error("policy_distribution: empty logits");
  if (!(temperature > 0.0)) throw Error("policy_distribution: temperature must be > 0");
  double max_scaled = -INFINITY;
  for (double z : logits) max_scaled = std::max(max_scaled, temperature * z);
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(temperature * logits[i] - max_scaled);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

}  // namespace neuroglue
