#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deploygate/param_space.hpp"
#include "deploygate/region.hpp"

namespace deploygate {

/// Row-major n x d array of unit-interval coordinates.
class UnitDesign {
 public:
  UnitDesign(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

enum class Stage { Stage1, Stage2 };
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view text);

struct SampleBatch {
  std::string space;
  std::vector<ScenarioConfig> configs;
  std::uint64_t seed = 0;
  Stage stage = Stage::Stage1;
};

/// Latin hypercube on [0,1)^d: in every column the n values fall one per
/// stratum [k/n, (k+1)/n). Column j is permuted and jittered by streams keyed
/// on (seed, j), so the result depends only on (n, d, seed).
UnitDesign lhs_unit(std::size_t n, std::size_t d, std::uint64_t seed);

/// Uniform Stage-1 batch: LHS over the continuous dimensions (through
/// scale_to_value), integer and categorical dimensions drawn from a
/// per-configuration stream.
SampleBatch sample_stage1(const ParamSpace& space, std::size_t n, std::uint64_t seed);

/// Boundary-focused Stage-2 batch over `region`.
///
/// round(fraction * n) configurations (ties to even) are placed by LHS in the
/// part of the region where every emphasis clause holds. The rest are placed
/// by LHS in the part of the region outside it, which is split into disjoint
/// boxes that each receive a share proportional to their scaled volume.
/// Obstacle counts are drawn from [obstacle_min, hi]. Emphasis block first.
SampleBatch sample_stage2(const ParamSpace& space, const BoundaryRegion& region, std::size_t n,
                          std::uint64_t seed, const EmphasisSpec& emphasis, std::int64_t obstacle_min);

/// Number of configurations assigned to the emphasis block.
std::size_t emphasis_count(double fraction, std::size_t n);

}  // namespace deploygate
