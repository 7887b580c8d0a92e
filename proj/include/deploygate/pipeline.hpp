#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deploygate/boundary.hpp"
#include "deploygate/dictionary.hpp"
#include "deploygate/gate.hpp"
#include "deploygate/remote.hpp"
#include "deploygate/risk_model.hpp"

namespace deploygate {

struct RunOptions {
  std::string oracle = "builtin";  // or tcp:host:port
  std::size_t threads = 0;         // 0 = hardware concurrency
  Millis timeout = kDefaultRemoteTimeout;
};

/// Runs every configuration of `batch` through the oracle in parallel and
/// labels zones; records are in batch order whatever the thread count.
Dataset run_batch(const ParamSpace& space, const SampleBatch& batch, const RunOptions& opts);

Dataset run_stage1(const std::string& space, std::size_t n, std::uint64_t seed, const RunOptions& opts = {});

struct Stage2Options {
  double emphasis_fraction = 0.30;
  double sr_lo = 0.30;
  double sr_hi = 0.70;
  std::size_t bins = 10;
  std::int64_t obstacle_min = 1;
};

/// Emphasis clauses for a space: friction < 0.3 and mass >= 0.5 when both
/// exist, none otherwise.
EmphasisSpec emphasis_for_space(const ParamSpace& space, double fraction);

Dataset run_stage2(const Dataset& stage1, std::size_t n, std::uint64_t seed, const Stage2Options& s2 = {},
                   const RunOptions& opts = {});

struct AnalyzeOptions {
  double sr_lo = 0.30;
  double sr_hi = 0.70;
  std::size_t bins = 10;
  std::size_t bootstrap_iters = 1000;
  bool thresholds = true;  // skip the bootstrap when false
  std::uint64_t seed = 2026;
  std::size_t threads = 0;
  std::size_t scatter_points = 3000;
};

struct HeatCell {
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
  std::size_t n = 0, n_success = 0;
  std::optional<double> sr;
};

struct BoundaryFit {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;
  double se0 = 0.0, se1 = 0.0, se2 = 0.0, se3 = 0.0;
};

struct CurvePoint {
  double mass = 0.0;
  double friction = 0.0;
  bool in_range = false;  // inside [friction lo, hi]
};

struct ThresholdRow {
  std::string dim;
  std::optional<ThresholdEstimate> estimate;  // empty when unidentifiable
};

struct AnalysisReport {
  Dataset data;
  BoundaryRegion region;
  std::optional<RiskModel> interaction_model;
  std::optional<BoundaryFit> boundary_fit;
  std::vector<CurvePoint> curve;
  std::vector<ThresholdRow> thresholds;
  RiskModel risk_model;
  RocResult roc;
  std::vector<std::string> heat_axes;  // friction and mass when both exist
  std::vector<HeatCell> heatmap;       // row-major over the first axis
  std::map<std::string, std::size_t> zones;

  explicit AnalysisReport(Dataset d) : data(std::move(d)) {}
};

/// Merges the inputs in order and runs every analysis.
AnalysisReport run_analyze(const std::vector<Dataset>& inputs, const AnalyzeOptions& opts = {});

/// Writes the report files into `dir`; returns their paths.
std::vector<std::filesystem::path> write_analysis(const AnalysisReport& report, const std::filesystem::path& dir,
                                                  const AnalyzeOptions& opts = {});
/// Only the figure data: heatmap, ROC, boundary curve and scatter subsample.
std::vector<std::filesystem::path> write_figures(const AnalysisReport& report, const std::filesystem::path& dir,
                                                 const AnalyzeOptions& opts = {});

/// Gate episodes from a dataset; edge flags from `edge` (records satisfying
/// every clause), or edge_* placements when no clause is given.
std::vector<GateEpisode> gate_episodes(const Dataset& ds, const std::vector<Clause>& edge);
GateDecision run_gate(const Dataset& ds, const Baseline& baseline, const std::vector<Clause>& edge = {});

}  // namespace deploygate
