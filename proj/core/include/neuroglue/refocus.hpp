#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace neuroglue {

// Conflicts that must elapse before refocus number `ordinal` (1-based):
// min(base + quad * (ordinal - 1)^2, cap).
struct RefocusSchedule {
  std::int64_t base = 50000;
  std::int64_t quad = 1000;
  std::int64_t cap = 250000;

  std::int64_t threshold(std::int64_t ordinal) const;
};

inline std::int64_t schedule_threshold(std::int64_t ordinal,
                                       const RefocusSchedule& s = {}) {
  return s.threshold(ordinal);
}

enum class WarmupMode { kWallClock, kConflicts };

struct RefocusConfig {
  double kappa = 1e4;
  double temperature = 4.0;
  RefocusSchedule schedule;
  WarmupMode warmup_mode = WarmupMode::kConflicts;
  double warmup_seconds = 15.0;
  std::uint64_t warmup_conflicts = 1000;
  // The fast glue EMA must exceed this multiple of the slow one.
  double ema_ratio = 1.1;
  std::size_t edge_cap = 10'000'000;
};

// softmax(temperature * logits), max-subtracted. Throws on empty input or
// non-positive temperature.
std::vector<double> policy_distribution(std::span<const double> logits,
                                        double temperature);

// Exponential moving average with the 1/(1-(1-alpha)^t) warm-up correction.
class GlueEma {
 public:
  explicit GlueEma(double alpha) : alpha_(alpha) {}

  void update(double glue) {
    raw_ += alpha_ * (glue - raw_);
    decay_pow_ *= 1.0 - alpha_;
  }
  // Bias-corrected estimate; 0 before the first update.
  double value() const {
    return decay_pow_ == 1.0 ? 0.0 : raw_ / (1.0 - decay_pow_);
  }
  double raw() const { return raw_; }
  double alpha() const { return alpha_; }

 private:
  double alpha_;
  double raw_ = 0.0;
  double decay_pow_ = 1.0;
};

}  // namespace neuroglue
