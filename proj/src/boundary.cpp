#include "deploygate/boundary.hpp"

#include <algorithm>
#include <cstdio>

#include "deploygate/binning.hpp"
#include "deploygate/error.hpp"

namespace deploygate {

std::vector<BinStat> bin_success_rates(const Dataset& ds, const std::string& dim, std::size_t k) {
  const ParamDef* def = ds.space.find(dim);
  if (def == nullptr) throw DomainError("unknown dimension '" + dim + "'");
  if (!def->continuous()) throw DomainError("'" + dim + "' is not continuous");
  if (k < 2) throw DomainError("need at least 2 bins");
  std::vector<BinStat> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    out[i].dim = dim;
    out[i].lo = bin_edge(def->lo(), def->hi(), k, i);
    out[i].hi = bin_edge(def->lo(), def->hi(), k, i + 1);
  }
  for (const auto& r : ds.records) {
    auto& b = out[bin_index(def->lo(), def->hi(), k, r.config.number(dim))];
    ++b.n;
    b.n_success += r.outcome.success ? 1 : 0;
  }
  for (auto& b : out)
    if (b.n > 0) b.sr = static_cast<double>(b.n_success) / static_cast<double>(b.n);
  return out;
}

BoundaryRegion detect_boundary(const Dataset& ds, const ParamSpace& space, double sr_lo, double sr_hi,
                               std::size_t bins) {
  if (ds.records.empty()) throw DomainError("boundary detection needs a non-empty dataset");
  if (!(ds.space == space)) throw SpaceMismatch("dataset space '" + ds.space.name() + "' differs from '" + space.name() + "'");
  if (!(sr_lo <= sr_hi)) throw DomainError("sr_lo must not exceed sr_hi");
  BoundaryRegion region;
  region.space = space.name();
  for (const ParamDef* def : space.continuous_dims()) {
    double lo = def->hi();
    double hi = def->lo();
    bool found = false;
    for (const auto& b : bin_success_rates(ds, def->name(), bins)) {
      if (!b.sr || *b.sr < sr_lo || *b.sr > sr_hi) continue;
      lo = std::min(lo, b.lo);
      hi = std::max(hi, b.hi);
      found = true;
    }
    if (found) {
      region.dims[def->name()] = {Range{lo, hi}, RangeSource::Detected};
    } else {
      region.dims[def->name()] = {space.fallback(def->name()).value_or(def->range()), RangeSource::Fallback};
    }
  }
  check_region(space, region);
  return region;
}

EmphasisSpec emphasis_for_franka() {
  EmphasisSpec e;
  e.clauses = {{"friction", Comparator::Less, 0.3}, {"mass", Comparator::GreaterEq, 0.5}};
  e.fraction = 0.30;
  return e;
}

std::string format_detection_report(const BoundaryRegion& region) {
  std::string out;
  char buf[160];
  for (const auto& [name, e] : region.dims) {
    std::snprintf(buf, sizeof buf, "%-12s [%.4f, %.4f]  %s\n", name.c_str(), e.range.lo, e.range.hi,
                  std::string(to_string(e.source)).c_str());
    out += buf;
  }
  return out;
}

}  // namespace deploygate
