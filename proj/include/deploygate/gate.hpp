#pragma once

#include <string>
#include <vector>

#include "deploygate/oracle.hpp"

namespace deploygate {

struct GateEpisode {
  EpisodeOutcome outcome;
  bool edge = false;  // belongs to an edge-case scenario
};

struct Baseline {
  double cycle_time = 0.0;  // seconds, > 0
  double miss_rate = 0.0;
  double sr = 1.0;
};

/// Metric names in report order.
inline const std::vector<std::string> kGateMetrics = {"success_rate", "cycle_time", "collision", "drop_rate",
                                                      "grasp_miss_rate"};

struct MetricReport {
  std::size_t episodes = 0;
  double sr = 0.0;
  double mean_cycle = 0.0;
  double baseline_cycle = 0.0;
  std::size_t collisions = 0;
  double drop_rate = 0.0;
  double miss_rate = 0.0;
  double baseline_miss_rate = 0.0;
  double edge_sr = 0.0;
  double baseline_sr = 1.0;
  std::vector<bool> verdicts;  // kGateMetrics order
};

/// Mean cycle time is taken over all episodes. Edge SR is over episodes
/// flagged `edge`, or over all episodes when none is flagged.
MetricReport evaluate_metrics(const std::vector<GateEpisode>& episodes, const Baseline& baseline);

struct ConfidenceBreakdown {
  double sr = 0.0;
  double cycle = 0.0;
  double collision = 0.0;
  double edge = 0.0;
  double delta = 0.0;
  double total = 0.0;
};

ConfidenceBreakdown confidence_breakdown(const MetricReport& report);
double confidence_score(const MetricReport& report);

struct GateDecision {
  bool pass = false;
  double confidence = 0.0;
  std::vector<std::string> failing;
  MetricReport report;
};

GateDecision gate_decision(const MetricReport& report);

std::string render_gate_text(const GateDecision& d);
std::string render_gate_json(const GateDecision& d);

}  // namespace deploygate
