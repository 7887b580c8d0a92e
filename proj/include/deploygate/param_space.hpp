#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace deploygate {

enum class ParamKind { ContinuousLinear, ContinuousLog, Integer, Categorical };

std::string_view to_string(ParamKind kind);
ParamKind parse_param_kind(std::string_view text);

constexpr bool is_continuous(ParamKind k) noexcept {
  return k == ParamKind::ContinuousLinear || k == ParamKind::ContinuousLog;
}

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  bool operator==(const Range&) const = default;
};

/// One sampled dimension. Immutable; built through the named factories, which
/// enforce lo < hi (lo > 0 for log scale) and a non-empty, duplicate-free
/// category list.
class ParamDef {
 public:
  static ParamDef linear(std::string name, double lo, double hi);
  static ParamDef log(std::string name, double lo, double hi);
  static ParamDef integer(std::string name, std::int64_t lo, std::int64_t hi);
  static ParamDef categorical(std::string name, std::vector<std::string> categories);

  const std::string& name() const noexcept { return name_; }
  ParamKind kind() const noexcept { return kind_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  Range range() const noexcept { return {lo_, hi_}; }
  const std::vector<std::string>& categories() const noexcept { return categories_; }
  bool continuous() const noexcept { return is_continuous(kind_); }

  /// Same dimension restricted to `r` (continuous and integer kinds only).
  ParamDef narrowed(Range r) const;

  bool operator==(const ParamDef&) const = default;

 private:
  ParamDef() = default;
  std::string name_;
  ParamKind kind_ = ParamKind::ContinuousLinear;
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::vector<std::string> categories_;
};

using ParamValue = std::variant<double, std::int64_t, std::string>;

class ParamSpace {
 public:
  ParamSpace(std::string name, std::vector<ParamDef> dims,
             std::map<std::string, Range> fallback_ranges = {});

  const std::string& name() const noexcept { return name_; }
  const std::vector<ParamDef>& dims() const noexcept { return dims_; }
  const std::map<std::string, Range>& fallback_ranges() const noexcept { return fallback_; }

  /// nullptr when the space has no such dimension.
  const ParamDef* find(std::string_view dim) const noexcept;
  const ParamDef& at(std::string_view dim) const;
  std::optional<Range> fallback(std::string_view dim) const;
  std::vector<const ParamDef*> continuous_dims() const;

  bool operator==(const ParamSpace&) const = default;

 private:
  std::string name_;
  std::vector<ParamDef> dims_;
  std::map<std::string, Range> fallback_;
};

struct ScenarioConfig {
  std::string space;
  std::map<std::string, ParamValue> values;
  std::uint64_t sample_idx = 0;

  bool operator==(const ScenarioConfig&) const = default;

  bool has(const std::string& dim) const { return values.count(dim) != 0; }
  /// Numeric view of a continuous or integer value; throws on missing/label values.
  double number(const std::string& dim) const;
  const std::string& label(const std::string& dim) const;
};

/// 8-D Franka pick-and-place space with domain-knowledge fallback ranges.
ParamSpace franka_space();
/// 5-D UR5e suction-gripper space; no fallback ranges.
ParamSpace ur5e_space();
/// Built-in spaces by identifier ("franka-8d", "ur5e-5d").
ParamSpace builtin_space(std::string_view name);

/// Maps a unit-interval coordinate onto the dimension. Throws DomainError
/// unless 0 <= u <= 1.
ParamValue scale_to_value(const ParamDef& def, double u);

/// Human-readable problems with `cfg`; empty when it is valid for `space`.
std::vector<std::string> validate_config(const ParamSpace& space, const ScenarioConfig& cfg);

/// Moments of a dimension under uniform sampling of its unit coordinate
/// (log-uniform for log scale, discrete uniform for integers).
struct Moments {
  double mean = 0.0;
  double sd = 1.0;
  bool operator==(const Moments&) const = default;
};
Moments uniform_moments(const ParamDef& def);

/// Versioned line-oriented description, e.g.
///   paramspace 1
///   name franka-8d
///   dim friction continuous-log 0.05 1.2
///   dim shape categorical box cylinder sphere irregular
///   fallback friction 0.05 0.4
std::string format_space(const ParamSpace& space);
ParamSpace parse_space(std::string_view text);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);
double parse_number(std::string_view text);

}  // namespace deploygate
