#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "deploygate/param_space.hpp"

namespace deploygate {

enum class RangeSource { Detected, Fallback };
std::string_view to_string(RangeSource s);

/// Narrowed per-dimension ranges for the continuous dimensions of a space.
struct BoundaryRegion {
  struct Entry {
    Range range;
    RangeSource source = RangeSource::Detected;
    bool operator==(const Entry&) const = default;
  };

  std::string space;
  std::map<std::string, Entry> dims;

  const Entry& at(const std::string& dim) const;
  bool operator==(const BoundaryRegion&) const = default;
};

/// Checks every range lies inside its dimension with lo < hi and that all
/// continuous dimensions are covered. Throws DomainError otherwise.
void check_region(const ParamSpace& space, const BoundaryRegion& region);

/// Text form:
///   region 1
///   space franka-8d
///   range friction 0.05 0.4 fallback
std::string format_region(const BoundaryRegion& region);
BoundaryRegion parse_region(std::string_view text);

enum class Comparator { Less, LessEq, Greater, GreaterEq };

struct Clause {
  std::string dim;
  Comparator cmp = Comparator::Less;
  double threshold = 0.0;

  bool holds(double v) const noexcept;
  bool operator==(const Clause&) const = default;
};

/// Conjunction of one-dimensional clauses plus the share of a Stage-2 budget
/// that goes to the sub-region they describe.
struct EmphasisSpec {
  std::vector<Clause> clauses;
  double fraction = 0.0;

  bool contains(const ScenarioConfig& cfg) const;
  bool operator==(const EmphasisSpec&) const = default;
};

/// Parses "friction<0.3,mass>=0.5" (comparators <, <=, >, >=).
std::vector<Clause> parse_predicate(std::string_view text);
std::string format_predicate(const std::vector<Clause>& clauses);

}  // namespace deploygate
