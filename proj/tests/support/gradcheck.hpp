#pragma once

// Central finite differences over network parameters.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "neuroglue/net.hpp"
#include "neuroglue/rng.hpp"

namespace gradcheck {

// Tensors whose true gradient vanishes (the last policy bias under a softmax
// loss) are judged against this norm instead of their own.
inline constexpr double kNormFloor = 1e-6;

struct TensorReport {
  std::string name;
  std::size_t checked = 0;
  // ||analytic - numeric|| / max(||analytic||, ||numeric||, norm_floor)
  double rel_error = 0.0;
  double max_abs_diff = 0.0;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
};

// Perturbs up to `max_entries` entries of every tensor (all when 0), chosen
// uniformly with `seed`.
inline std::vector<TensorReport> compare(
    const neuroglue::NetParams& params, const neuroglue::NetParams& analytic,
    const std::function<double(const neuroglue::NetParams&)>& loss, double step,
    std::size_t max_entries = 0, std::uint64_t seed = 1, double norm_floor = kNormFloor) {
  neuroglue::NetParams p = params;
  auto views = neuroglue::tensor_views(p);
  const auto grads = neuroglue::tensor_views(analytic);
  neuroglue::Rng rng(seed);
  std::vector<TensorReport> out;
  for (std::size_t t = 0; t < views.size(); ++t) {
    auto& data = views[t].data;
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (max_entries && idx.size() > max_entries) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(max_entries);
    }
    TensorReport r{views[t].name, idx.size(), 0.0, 0.0};
    double diff2 = 0, a2 = 0, n2 = 0;
    for (std::size_t i : idx) {
      const double saved = data[i];
      data[i] = saved + step;
      const double up = loss(p);
      data[i] = saved - step;
      const double down = loss(p);
      data[i] = saved;
      const double numeric = (up - down) / (2 * step);
      const double a = grads[t].data[i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
      r.max_abs_diff = std::max(r.max_abs_diff, std::abs(a - numeric));
    }
    const double scale = std::max({std::sqrt(a2), std::sqrt(n2), norm_floor});
    r.rel_error = std::sqrt(diff2) / scale;
    r.analytic_norm = std::sqrt(a2);
    r.numeric_norm = std::sqrt(n2);
    out.push_back(r);
  }
  return out;
}

inline double worst(const std::vector<TensorReport>& reports) {
  double w = 0;
  for (const auto& r : reports) w = std::max(w, r.rel_error);
  return w;
}

}  // namespace gradcheck
