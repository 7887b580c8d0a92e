#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "deploygate/dictionary.hpp"
#include "deploygate/region.hpp"

namespace deploygate {

struct BinStat {
  std::string dim;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
  std::size_t n_success = 0;
  std::optional<double> sr;  // empty when n == 0

  bool operator==(const BinStat&) const = default;
};

/// k equal-width bins over the full raw range of a continuous dimension.
std::vector<BinStat> bin_success_rates(const Dataset& ds, const std::string& dim, std::size_t k);

/// Per continuous dimension: interval hull of the non-empty bins whose SR lies
/// in [sr_lo, sr_hi], or the space's fallback range (the full range when the
/// space defines none) if no bin qualifies.
BoundaryRegion detect_boundary(const Dataset& ds, const ParamSpace& space, double sr_lo = 0.30,
                               double sr_hi = 0.70, std::size_t bins = 10);

/// friction < 0.3 and mass >= 0.5, 30% of the Stage-2 budget.
EmphasisSpec emphasis_for_franka();

/// One line per dimension: name, range and provenance.
std::string format_detection_report(const BoundaryRegion& region);

}  // namespace deploygate
