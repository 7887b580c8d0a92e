#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "deploygate/boundary.hpp"
#include "deploygate/error.hpp"
#include "deploygate/rng.hpp"
#include "deploygate/sampler.hpp"

using namespace deploygate;

namespace {

bool stratified(const UnitDesign& a) {
  for (std::size_t j = 0; j < a.cols(); ++j) {
    std::vector<std::size_t> cells;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const double v = a(i, j);
      if (!(v >= 0.0 && v < 1.0)) return false;
      cells.push_back(static_cast<std::size_t>(std::floor(v * static_cast<double>(a.rows()))));
    }
    std::sort(cells.begin(), cells.end());
    for (std::size_t k = 0; k < cells.size(); ++k)
      if (cells[k] != k) return false;
  }
  return true;
}

BoundaryRegion franka_region() {
  BoundaryRegion r;
  r.space = "franka-8d";
  r.dims["friction"] = {{0.1, 0.6}, RangeSource::Detected};
  r.dims["mass"] = {{0.2, 1.5}, RangeSource::Detected};
  r.dims["com_offset"] = {{0.0, 0.4}, RangeSource::Fallback};
  r.dims["size"] = {{0.03, 0.08}, RangeSource::Detected};
  r.dims["ik_noise"] = {{0.0, 0.04}, RangeSource::Detected};
  return r;
}

}  // namespace

TEST(Rng, SplitMixReferenceSequence) {
  // SplitMix64 seeded with 0: first outputs of the published generator.
  Stream s(std::uint64_t{0});
  EXPECT_EQ(s.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(s.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(s.next(), 0x06C45D188009454FULL);
}

TEST(Rng, StreamsAreKeyed) {
  EXPECT_NE(derive_key(1, "a", 0), derive_key(1, "a", 1));
  EXPECT_NE(derive_key(1, "a", 0), derive_key(1, "b", 0));
  EXPECT_NE(derive_key(1, "a", 0), derive_key(2, "a", 0));
  Stream s(9, "x", 3);
  for (int i = 0; i < 1000; ++i) {
    const double u = s.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(s.below(7), 7u);
  }
}

TEST(Lhs, Quartiles) {
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    const UnitDesign a = lhs_unit(4, 1, seed);
    std::set<int> q;
    for (std::size_t i = 0; i < 4; ++i) q.insert(static_cast<int>(a(i, 0) * 4));
    EXPECT_EQ(q, (std::set<int>{0, 1, 2, 3}));
  }
}

TEST(Lhs, SingleRow) {
  const UnitDesign a = lhs_unit(1, 3, 5);
  ASSERT_EQ(a.rows(), 1u);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_GE(a(0, j), 0.0);
    EXPECT_LT(a(0, j), 1.0);
  }
}

TEST(Lhs, Deterministic) {
  EXPECT_EQ(lhs_unit(1000, 5, 2026).data(), lhs_unit(1000, 5, 2026).data());
  EXPECT_NE(lhs_unit(1000, 5, 2026).data(), lhs_unit(1000, 5, 2027).data());
}

TEST(Lhs, StratifiedForManyShapes) {
  for (std::size_t n : {1u, 2u, 3u, 17u, 64u, 501u})
    for (std::size_t d : {1u, 2u, 8u})
      for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_TRUE(stratified(lhs_unit(n, d, seed))) << n << "x" << d;
}

TEST(Lhs, RejectsEmpty) {
  EXPECT_THROW(lhs_unit(0, 3, 1), DomainError);
  EXPECT_THROW(lhs_unit(3, 0, 1), DomainError);
}

TEST(Stage1, ValidDeterministicAndDecileExact) {
  const ParamSpace s = franka_space();
  const SampleBatch b = sample_stage1(s, 10000, 2026);
  ASSERT_EQ(b.configs.size(), 10000u);
  EXPECT_EQ(b.stage, Stage::Stage1);
  for (std::size_t i = 0; i < b.configs.size(); ++i) {
    EXPECT_EQ(b.configs[i].sample_idx, i);
    ASSERT_TRUE(validate_config(s, b.configs[i]).empty());
  }
  // Empirical deciles in each continuous dimension's unit coordinate.
  for (const ParamDef* d : s.continuous_dims()) {
    std::vector<int> count(10, 0);
    for (const auto& c : b.configs) {
      const double x = c.number(d->name());
      const double u = d->kind() == ParamKind::ContinuousLog ? std::log(x / d->lo()) / std::log(d->hi() / d->lo())
                                                             : (x - d->lo()) / (d->hi() - d->lo());
      ++count[std::min(9, static_cast<int>(std::floor(u * 10.0)))];
    }
    for (int k = 0; k < 10; ++k) EXPECT_EQ(count[k], 1000) << d->name() << " decile " << k;
  }
  const SampleBatch again = sample_stage1(s, 10000, 2026);
  EXPECT_EQ(again.configs, b.configs);
}

TEST(Stage1, DiscreteDimsCoverTheirDomains) {
  const SampleBatch b = sample_stage1(franka_space(), 2000, 1);
  std::set<std::int64_t> obs;
  std::set<std::string> shapes, placements;
  for (const auto& c : b.configs) {
    obs.insert(std::get<std::int64_t>(c.values.at("obstacles")));
    shapes.insert(c.label("shape"));
    placements.insert(c.label("placement"));
  }
  EXPECT_EQ(obs.size(), 6u);
  EXPECT_EQ(shapes.size(), 4u);
  EXPECT_EQ(placements.size(), 8u);
}

TEST(Stage2, EmphasisCountRounding) {
  EXPECT_EQ(emphasis_count(0.30, 10), 3u);
  EXPECT_EQ(emphasis_count(0.30, 10000), 3000u);
  EXPECT_EQ(emphasis_count(0.25, 10), 2u);  // 2.5 -> 2
  EXPECT_EQ(emphasis_count(0.35, 10), 4u);  // 3.5 -> 4
  EXPECT_EQ(emphasis_count(0.0, 10), 0u);
  EXPECT_THROW(emphasis_count(1.5, 10), DomainError);
}

TEST(Stage2, ExactEmphasisShareAndObstacleFloor) {
  const ParamSpace s = franka_space();
  const BoundaryRegion r = franka_region();
  const EmphasisSpec e = emphasis_for_franka();
  for (std::size_t n : {10u, 100u, 997u}) {
    const SampleBatch b = sample_stage2(s, r, n, 2024, e, 1);
    ASSERT_EQ(b.configs.size(), n);
    EXPECT_EQ(b.stage, Stage::Stage2);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = b.configs[i];
      EXPECT_EQ(c.sample_idx, i);
      ASSERT_TRUE(validate_config(s, c).empty());
      EXPECT_GE(std::get<std::int64_t>(c.values.at("obstacles")), 1);
      for (const auto& [dim, entry] : r.dims) EXPECT_TRUE(entry.range.contains(c.number(dim))) << dim;
      if (e.contains(c)) ++inside;
      // Emphasis block comes first.
      EXPECT_EQ(e.contains(c), i < emphasis_count(0.30, n));
    }
    EXPECT_EQ(inside, emphasis_count(0.30, n));
  }
}

TEST(Stage2, ZeroFractionIsPlainLhsOverRegion) {
  const ParamSpace s = franka_space();
  const BoundaryRegion r = franka_region();
  EmphasisSpec none = emphasis_for_franka();
  none.fraction = 0.0;
  const SampleBatch b = sample_stage2(s, r, 200, 3, none, 0);
  // Each region dimension is stratified in its own unit coordinate.
  for (const auto& [dim, entry] : r.dims) {
    const ParamDef& d = s.at(dim);
    std::vector<std::size_t> cells;
    for (const auto& c : b.configs) {
      const double x = c.number(dim);
      const double u = d.kind() == ParamKind::ContinuousLog
                           ? std::log(x / entry.range.lo) / std::log(entry.range.hi / entry.range.lo)
                           : (x - entry.range.lo) / (entry.range.hi - entry.range.lo);
      cells.push_back(std::min<std::size_t>(199, static_cast<std::size_t>(std::floor(u * 200.0 + 1e-9))));
    }
    std::sort(cells.begin(), cells.end());
    std::size_t distinct = static_cast<std::size_t>(std::unique(cells.begin(), cells.end()) - cells.begin());
    EXPECT_GE(distinct, 198u) << dim;  // log rounding can move an edge value by one cell
  }
}

TEST(Stage2, Deterministic) {
  const ParamSpace s = franka_space();
  const auto a = sample_stage2(s, franka_region(), 300, 2024, emphasis_for_franka(), 1);
  const auto b = sample_stage2(s, franka_region(), 300, 2024, emphasis_for_franka(), 1);
  EXPECT_EQ(a.configs, b.configs);
}

TEST(Stage2, EmptyEmphasisRegionIsAnError) {
  BoundaryRegion r = franka_region();
  r.dims["friction"].range = {0.35, 0.6};  // friction < 0.3 impossible
  EXPECT_THROW(sample_stage2(franka_space(), r, 10, 1, emphasis_for_franka(), 1), DomainError);
}
