#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace deploygate {

/// Lower edge of bin i when [lo, hi] is cut into k equal-width bins.
inline double bin_edge(double lo, double hi, std::size_t k, std::size_t i) noexcept {
  if (i >= k) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k);
}

/// Bin of v: right-open bins except the last, which is closed. Values are
/// assumed to lie in [lo, hi]; outliers are clamped to the end bins. The
/// result is consistent with bin_edge, so v == bin_edge(i) lands in bin i.
inline std::size_t bin_index(double lo, double hi, std::size_t k, double v) noexcept {
  const double t = (v - lo) / (hi - lo) * static_cast<double>(k);
  std::size_t i = t <= 0.0 ? 0 : std::min(static_cast<std::size_t>(std::floor(t)), k - 1);
  while (i > 0 && v < bin_edge(lo, hi, k, i)) --i;
  while (i + 1 < k && v >= bin_edge(lo, hi, k, i + 1)) ++i;
  return i;
}

}  // namespace deploygate
