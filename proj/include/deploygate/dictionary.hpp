#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "deploygate/oracle.hpp"
#include "deploygate/param_space.hpp"
#include "deploygate/sampler.hpp"

namespace deploygate {

enum class Zone { Safe, Boundary, Danger };
std::string_view to_string(Zone z);
Zone parse_zone(std::string_view text);

/// safe: SR >= 0.70, boundary: 0.30 <= SR < 0.70, danger: SR < 0.30.
Zone zone_for_sr(double sr, double safe_cutoff = 0.70, double danger_cutoff = 0.30);

/// One failure-dictionary row.
struct ExperimentRecord {
  ScenarioConfig config;  // dimension values and sample_idx
  EpisodeOutcome outcome; // includes the analytic fail_prob
  Zone zone = Zone::Danger;
  std::string robot;
  Stage stage = Stage::Stage1;
  std::uint64_t seed = 0;

  bool operator==(const ExperimentRecord&) const = default;
};

struct DatasetCounts {
  std::size_t n = 0;
  std::size_t n_success = 0;
  std::size_t n_fail = 0;
  bool operator==(const DatasetCounts&) const = default;
};

struct Dataset {
  ParamSpace space;
  std::vector<ExperimentRecord> records;
  std::string robot;
  std::string stage = "stage1";  // "stage1", "stage2" or "combined"
  std::uint64_t seed = 0;
  nlohmann::ordered_json manifest = nlohmann::ordered_json::object();

  explicit Dataset(ParamSpace s) : space(std::move(s)) {}

  DatasetCounts counts() const;
  double success_rate() const;
  bool operator==(const Dataset&) const = default;
};

inline constexpr int kDictionarySchemaVersion = 1;

/// Robot label conventionally attached to a space ("franka", "ur5e").
std::string robot_for_space(std::string_view space);

/// Problems with a record against its space; empty when valid.
std::vector<std::string> record_violations(const ParamSpace& space, const ExperimentRecord& r);

/// Line-delimited JSON: one header object then one object per record.
void write_dataset(std::ostream& out, const Dataset& ds);
/// Writes through a temporary file renamed into place.
void write_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

/// Flat CSV (one column per field) for plotting tools.
void write_csv(std::ostream& out, const Dataset& ds);

/// Concatenation of a then b; throws SpaceMismatch for different spaces.
Dataset merge_datasets(const Dataset& a, const Dataset& b);

/// Equal-width cells over one or two dimensions (full ranges).
struct CellSpec {
  std::vector<std::pair<std::string, std::size_t>> axes;  // (dimension, bins)
  std::size_t min_count = 5;
};

/// friction x mass 10 x 10 when both exist, otherwise the first two
/// continuous dimensions.
CellSpec default_cell_spec(const ParamSpace& space);

/// Zone of every record from its cell's empirical SR. Cells holding fewer than
/// min_count records fall back to each record's analytic 1 - fail_prob.
Dataset label_zones(const Dataset& ds, const CellSpec& cells);

/// Per-cell (n, n_success) in row-major order of the axes.
std::vector<std::pair<std::size_t, std::size_t>> cell_counts(const Dataset& ds, const CellSpec& cells);

}  // namespace deploygate
