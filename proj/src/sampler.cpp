#include "deploygate/sampler.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>

#include "deploygate/error.hpp"
#include "deploygate/rng.hpp"

namespace deploygate {

namespace {

// Width of a sub-range measured in the dimension's own scale.
double scaled_width(const ParamDef& d, Range r) {
  if (d.kind() == ParamKind::ContinuousLog) return std::log(r.hi) - std::log(r.lo);
  return r.hi - r.lo;
}

struct Box {
  std::vector<Range> ranges;  // one per continuous dim
  double volume = 0.0;        // fraction of the region's scaled volume
};

void fill_discrete(const ParamSpace& space, ScenarioConfig& cfg, std::uint64_t seed,
                   std::int64_t obstacle_min) {
  Stream s(seed, "discrete", cfg.sample_idx);
  for (const auto& d : space.dims()) {
    if (d.continuous()) continue;
    const double u = s.uniform();
    if (d.kind() == ParamKind::Integer && d.name() == "obstacles") {
      const auto lo = std::max<std::int64_t>(obstacle_min, static_cast<std::int64_t>(d.lo()));
      const auto hi = static_cast<std::int64_t>(d.hi());
      if (lo >= hi) {
        cfg.values[d.name()] = hi;
      } else {
        cfg.values[d.name()] = scale_to_value(ParamDef::integer(d.name(), lo, hi), u);
      }
    } else {
      cfg.values[d.name()] = scale_to_value(d, u);
    }
  }
}

void place_block(const std::vector<ParamDef>& dims, std::size_t count, std::uint64_t key,
                 std::vector<ScenarioConfig>& out, const std::string& space) {
  if (count == 0) return;
  const UnitDesign u = lhs_unit(count, dims.size(), key);
  for (std::size_t i = 0; i < count; ++i) {
    ScenarioConfig cfg;
    cfg.space = space;
    cfg.sample_idx = out.size();
    for (std::size_t j = 0; j < dims.size(); ++j) cfg.values[dims[j].name()] = scale_to_value(dims[j], u(i, j));
    out.push_back(std::move(cfg));
  }
}

std::vector<ParamDef> box_dims(const std::vector<const ParamDef*>& cont, const std::vector<Range>& ranges) {
  std::vector<ParamDef> out;
  out.reserve(cont.size());
  for (std::size_t j = 0; j < cont.size(); ++j) out.push_back(cont[j]->narrowed(ranges[j]));
  return out;
}

}  // namespace

std::string_view to_string(Stage s) { return s == Stage::Stage1 ? "stage1" : "stage2"; }

Stage parse_stage(std::string_view text) {
  if (text == "stage1") return Stage::Stage1;
  if (text == "stage2") return Stage::Stage2;
  throw SchemaError("unknown stage '" + std::string(text) + "'");
}

std::size_t emphasis_count(double fraction, std::size_t n) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw DomainError("emphasis fraction must lie in [0,1]");
  // nearbyint honours the default round-to-nearest-even mode.
  return static_cast<std::size_t>(std::nearbyint(fraction * static_cast<double>(n)));
}

UnitDesign lhs_unit(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || d == 0) throw DomainError("lhs_unit requires n >= 1 and d >= 1");
  UnitDesign out(n, d);
  const double dn = static_cast<double>(n);
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Stream shuffle(seed, "lhs-permutation", j);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[shuffle.below(i + 1)]);
    Stream jitter(seed, "lhs-jitter", j);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = perm[i];
      const double kd = static_cast<double>(k);
      double v = (kd + jitter.uniform()) / dn;
      // Rounding in (k + r) / n must not push the value out of its stratum.
      while (v > 0.0 && std::floor(v * dn) > kd) v = std::nextafter(v, 0.0);
      while (std::floor(v * dn) < kd) v = std::nextafter(v, 1.0);
      out(i, j) = v;
    }
  }
  return out;
}

SampleBatch sample_stage1(const ParamSpace& space, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample_stage1 requires n >= 1");
  std::vector<ParamDef> cont;
  for (const auto* d : space.continuous_dims()) cont.push_back(*d);
  SampleBatch batch;
  batch.space = space.name();
  batch.seed = seed;
  batch.stage = Stage::Stage1;
  batch.configs.reserve(n);
  if (cont.empty()) {
    for (std::size_t i = 0; i < n; ++i) batch.configs.push_back(ScenarioConfig{space.name(), {}, i});
  } else {
    place_block(cont, n, derive_key(seed, "stage1-lhs"), batch.configs, space.name());
  }
  for (auto& cfg : batch.configs)
    fill_discrete(space, cfg, seed, std::numeric_limits<std::int64_t>::min());
  return batch;
}

SampleBatch sample_stage2(const ParamSpace& space, const BoundaryRegion& region, std::size_t n,
                          std::uint64_t seed, const EmphasisSpec& emphasis, std::int64_t obstacle_min) {
  if (n == 0) throw DomainError("sample_stage2 requires n >= 1");
  check_region(space, region);
  const auto cont = space.continuous_dims();
  if (cont.empty()) throw DomainError("sample_stage2 needs at least one continuous dimension");

  std::vector<Range> full(cont.size());
  for (std::size_t j = 0; j < cont.size(); ++j) full[j] = region.at(cont[j]->name()).range;

  const std::size_t n_emph = emphasis.clauses.empty() ? 0 : emphasis_count(emphasis.fraction, n);

  SampleBatch batch;
  batch.space = space.name();
  batch.seed = seed;
  batch.stage = Stage::Stage2;
  batch.configs.reserve(n);

  if (n_emph == 0) {
    place_block(box_dims(cont, full), n, derive_key(seed, "stage2-lhs"), batch.configs, space.name());
  } else {
    // Emphasis box: the region clipped by every clause. Strict comparators
    // become closed bounds at the adjacent representable value.
    std::vector<Range> emph = full;
    for (const auto& c : emphasis.clauses) {
      auto it = std::find_if(cont.begin(), cont.end(), [&](const ParamDef* d) { return d->name() == c.dim; });
      if (it == cont.end()) throw DomainError("emphasis clause on non-continuous dimension '" + c.dim + "'");
      Range& r = emph[static_cast<std::size_t>(it - cont.begin())];
      switch (c.cmp) {
        case Comparator::Less: r.hi = std::min(r.hi, std::nextafter(c.threshold, -INFINITY)); break;
        case Comparator::LessEq: r.hi = std::min(r.hi, c.threshold); break;
        case Comparator::Greater: r.lo = std::max(r.lo, std::nextafter(c.threshold, INFINITY)); break;
        case Comparator::GreaterEq: r.lo = std::max(r.lo, c.threshold); break;
      }
    }
    for (std::size_t j = 0; j < emph.size(); ++j)
      if (!(emph[j].lo < emph[j].hi))
        throw DomainError("emphasis region empty: " + format_predicate(emphasis.clauses) + " misses " +
                          cont[j]->name() + " range [" + format_number(full[j].lo) + ", " +
                          format_number(full[j].hi) + "]");

    // Complement of the emphasis box inside the region as disjoint slabs:
    // slab (k, side) fixes dims < k to the emphasis box, dim k to the part
    // below/above it, and leaves dims > k at the full region.
    std::vector<Box> boxes;
    for (std::size_t k = 0; k < cont.size(); ++k) {
      for (int side = 0; side < 2; ++side) {
        Box b;
        b.ranges = full;
        for (std::size_t j = 0; j < k; ++j) b.ranges[j] = emph[j];
        if (side == 0) {
          if (!(full[k].lo < emph[k].lo)) continue;
          b.ranges[k] = {full[k].lo, std::nextafter(emph[k].lo, -INFINITY)};
        } else {
          if (!(emph[k].hi < full[k].hi)) continue;
          b.ranges[k] = {std::nextafter(emph[k].hi, INFINITY), full[k].hi};
        }
        if (!(b.ranges[k].lo < b.ranges[k].hi)) continue;
        b.volume = 1.0;
        for (std::size_t j = 0; j < cont.size(); ++j)
          b.volume *= scaled_width(*cont[j], b.ranges[j]) / scaled_width(*cont[j], full[j]);
        boxes.push_back(std::move(b));
      }
    }

    place_block(box_dims(cont, emph), n_emph, derive_key(seed, "stage2-emphasis"), batch.configs, space.name());

    const std::size_t rest = n - n_emph;
    if (boxes.empty()) {
      place_block(box_dims(cont, full), rest, derive_key(seed, "stage2-lhs"), batch.configs, space.name());
    } else {
      // Largest-remainder apportionment of the remaining budget.
      double total = 0.0;
      for (const auto& b : boxes) total += b.volume;
      std::vector<std::size_t> counts(boxes.size());
      std::vector<std::pair<double, std::size_t>> frac;
      std::size_t assigned = 0;
      for (std::size_t b = 0; b < boxes.size(); ++b) {
        const double quota = static_cast<double>(rest) * boxes[b].volume / total;
        counts[b] = static_cast<std::size_t>(std::floor(quota));
        assigned += counts[b];
        frac.emplace_back(quota - std::floor(quota), b);
      }
      std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      for (std::size_t i = 0; assigned < rest; ++i, ++assigned) ++counts[frac[i % frac.size()].second];
      for (std::size_t b = 0; b < boxes.size(); ++b)
        place_block(box_dims(cont, boxes[b].ranges), counts[b], derive_key(seed, "stage2-box", b), batch.configs,
                    space.name());
    }
  }
  for (auto& cfg : batch.configs) fill_discrete(space, cfg, seed, obstacle_min);
  return batch;
}

}  // namespace deploygate
