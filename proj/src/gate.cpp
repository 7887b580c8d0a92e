#include "deploygate/gate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "deploygate/error.hpp"

namespace deploygate {

namespace {

constexpr double kSrThreshold = 0.92;
constexpr double kCycleFactor = 1.1;
constexpr double kDropThreshold = 0.03;
constexpr double kMissFactor = 1.2;
// Slack on the inclusive comparisons so that products such as 1.1 * baseline
// do not flip a verdict through rounding.
constexpr double kSlack = 1e-12;

}  // namespace

MetricReport evaluate_metrics(const std::vector<GateEpisode>& episodes, const Baseline& baseline) {
  if (episodes.empty()) throw DomainError("gate needs at least one episode");
  if (!(baseline.cycle_time > 0.0)) throw DomainError("baseline cycle time must be positive");
  if (!(baseline.miss_rate >= 0.0 && baseline.miss_rate <= 1.0)) throw DomainError("baseline miss rate out of [0,1]");
  if (!(baseline.sr >= 0.0 && baseline.sr <= 1.0)) throw DomainError("baseline SR out of [0,1]");

  std::size_t success = 0, drops = 0, misses = 0, edge = 0, edge_success = 0;
  double cycle = 0.0;
  MetricReport r;
  for (const auto& e : episodes) {
    const auto& o = e.outcome;
    success += o.success;
    r.collisions += o.collision;
    drops += o.failure_type == FailureType::GripLoss;
    misses += o.failure_type == FailureType::GraspMiss;
    cycle += o.cycle_time;
    if (e.edge) {
      ++edge;
      edge_success += o.success;
    }
  }
  const double n = static_cast<double>(episodes.size());
  r.episodes = episodes.size();
  r.sr = static_cast<double>(success) / n;
  r.mean_cycle = cycle / n;
  r.baseline_cycle = baseline.cycle_time;
  r.drop_rate = static_cast<double>(drops) / n;
  r.miss_rate = static_cast<double>(misses) / n;
  r.baseline_miss_rate = baseline.miss_rate;
  r.edge_sr = edge > 0 ? static_cast<double>(edge_success) / static_cast<double>(edge) : r.sr;
  r.baseline_sr = baseline.sr;
  r.verdicts = {
      r.sr >= kSrThreshold - kSlack,
      r.mean_cycle <= kCycleFactor * r.baseline_cycle * (1 + kSlack),
      r.collisions == 0,
      r.drop_rate <= kDropThreshold + kSlack,
      r.miss_rate <= kMissFactor * r.baseline_miss_rate + kSlack,
  };
  return r;
}

ConfidenceBreakdown confidence_breakdown(const MetricReport& r) {
  if (!(r.baseline_cycle > 0.0)) throw DomainError("baseline cycle time must be positive");
  ConfidenceBreakdown c;
  c.sr = 30.0 * std::min(1.0, r.sr / kSrThreshold);
  c.cycle = 20.0 * std::max(0.0, 1.0 - std::abs(r.mean_cycle - r.baseline_cycle) / r.baseline_cycle);
  c.collision = r.collisions == 0 ? 25.0 : 0.0;
  c.edge = 15.0 * std::clamp(r.edge_sr, 0.0, 1.0);
  c.delta = 10.0 * std::clamp(1.0 + (r.sr - r.baseline_sr), 0.0, 1.0);
  c.total = std::clamp(c.sr + c.cycle + c.collision + c.edge + c.delta, 1.0, 100.0);
  return c;
}

double confidence_score(const MetricReport& report) { return confidence_breakdown(report).total; }

GateDecision gate_decision(const MetricReport& report) {
  if (report.verdicts.size() != kGateMetrics.size()) throw DomainError("report has no verdicts");
  GateDecision d;
  d.report = report;
  d.confidence = confidence_score(report);
  for (std::size_t i = 0; i < kGateMetrics.size(); ++i)
    if (!report.verdicts[i]) d.failing.push_back(kGateMetrics[i]);
  d.pass = d.failing.empty();
  return d;
}

namespace {

struct Row {
  const char* name;
  double value;
  std::string threshold;
};

std::vector<Row> rows(const MetricReport& r) {
  char buf[64];
  std::vector<Row> out;
  out.push_back({"success_rate", r.sr, ">= 0.92"});
  std::snprintf(buf, sizeof buf, "<= %.3f s", kCycleFactor * r.baseline_cycle);
  out.push_back({"cycle_time", r.mean_cycle, buf});
  out.push_back({"collision", static_cast<double>(r.collisions), "= 0"});
  out.push_back({"drop_rate", r.drop_rate, "<= 0.03"});
  std::snprintf(buf, sizeof buf, "<= %.4f", kMissFactor * r.baseline_miss_rate);
  out.push_back({"grasp_miss_rate", r.miss_rate, buf});
  return out;
}

}  // namespace

std::string render_gate_text(const GateDecision& d) {
  std::string out;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-16s %10s  %-14s %s\n", "metric", "value", "threshold", "verdict");
  out += buf;
  const auto rs = rows(d.report);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    // Collision is a count.
    std::snprintf(buf, sizeof buf, i == 2 ? "%-16s %10.0f  %-14s %s\n" : "%-16s %10.4f  %-14s %s\n", rs[i].name,
                  rs[i].value, rs[i].threshold.c_str(), d.report.verdicts[i] ? "pass" : "FAIL");
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "episodes %zu  edge_sr %.4f  confidence %.1f/100\n", d.report.episodes,
                d.report.edge_sr, d.confidence);
  out += buf;
  out += d.pass ? "GATE: PASS\n" : "GATE: FAIL\n";
  return out;
}

std::string render_gate_json(const GateDecision& d) {
  nlohmann::ordered_json j;
  j["pass"] = d.pass;
  j["confidence"] = d.confidence;
  j["failing"] = d.failing;
  auto& metrics = j["metrics"] = nlohmann::ordered_json::array();
  const auto rs = rows(d.report);
  for (std::size_t i = 0; i < rs.size(); ++i)
    metrics.push_back({{"metric", rs[i].name}, {"value", rs[i].value}, {"threshold", rs[i].threshold},
                       {"pass", static_cast<bool>(d.report.verdicts[i])}});
  const auto c = confidence_breakdown(d.report);
  j["components"] = {{"sr", c.sr}, {"cycle_time", c.cycle}, {"collision", c.collision}, {"edge", c.edge},
                     {"delta_baseline", c.delta}};
  j["episodes"] = d.report.episodes;
  j["edge_sr"] = d.report.edge_sr;
  j["baseline"] = {{"cycle_time", d.report.baseline_cycle}, {"miss_rate", d.report.baseline_miss_rate},
                   {"sr", d.report.baseline_sr}};
  return j.dump(2) + "\n";
}

}  // namespace deploygate
