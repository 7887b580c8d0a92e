#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "deploygate/error.hpp"
#include "deploygate/pipeline.hpp"
#include "support.hpp"

using namespace deploygate;
namespace fs = std::filesystem;

namespace {

std::string dump(const Dataset& ds) {
  std::ostringstream out;
  write_dataset(out, ds);
  return out.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

Dataset with_outcomes(Dataset ds, FailureType mode, std::size_t count) {
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    auto& o = ds.records[i].outcome;
    o = EpisodeOutcome{};
    o.success = i >= count;
    o.cycle_time = 3.5;
    if (!o.success) {
      o.failure_type = mode;
      o.collision = mode == FailureType::Collision;
    }
  }
  return ds;
}

}  // namespace

TEST(Stage1, DeterministicAcrossThreads) {
  const Dataset a = run_stage1("franka-8d", 500, 2026, {"builtin", 1});
  const Dataset b = run_stage1("franka-8d", 500, 2026, {"builtin", 3});
  EXPECT_EQ(dump(a), dump(b));
  EXPECT_NE(dump(a), dump(run_stage1("franka-8d", 500, 2027, {"builtin", 1})));
}

TEST(Stage1, RecordsAreValidAndProvenanced) {
  const Dataset ds = run_stage1("franka-8d", 400, 11, {"builtin", 2});
  EXPECT_EQ(ds.robot, "franka");
  EXPECT_EQ(ds.stage, "stage1");
  EXPECT_EQ(ds.seed, 11u);
  EXPECT_EQ(ds.manifest.at("command"), "stage1");
  EXPECT_EQ(ds.manifest.at("n"), 400);
  EXPECT_EQ(ds.manifest.at("oracle"), "builtin");
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    ASSERT_TRUE(record_violations(ds.space, r).empty());
    EXPECT_EQ(r.config.sample_idx, i);
    EXPECT_EQ(r.stage, Stage::Stage1);
    EXPECT_NEAR(r.outcome.fail_prob, 1.0 - ref::franka_p(r.config), 1e-12);
  }
}

TEST(Stage1, Ur5eFailuresAreGraspMisses) {
  const Dataset ds = run_stage1("ur5e-5d", 100, 2026, {"builtin", 1});
  EXPECT_EQ(ds.robot, "ur5e");
  std::size_t fails = 0;
  for (const auto& r : ds.records)
    if (!r.outcome.success) {
      ++fails;
      EXPECT_EQ(r.outcome.failure_type, FailureType::GraspMiss);
    }
  EXPECT_GT(fails, 0u);
}

TEST(Stage1, RateNearAnalyticExpectation) {
  const Dataset ds = run_stage1("franka-8d", 10000, 2026, {"builtin", 0});
  EXPECT_NEAR(ds.success_rate(), ref::franka_mc_sr(1000000, 1), 0.02);
  EXPECT_THROW(run_stage1("abb-6d", 10, 1), DomainError);
}

TEST(Stage2, ObstaclesEmphasisAndDeterminism) {
  const Dataset s1 = run_stage1("franka-8d", 2000, 2026, {"builtin", 1});
  const Dataset s2 = run_stage2(s1, 1000, 2024, {}, {"builtin", 2});
  EXPECT_EQ(s2.stage, "stage2");
  ASSERT_EQ(s2.records.size(), 1000u);
  const EmphasisSpec e = emphasis_for_franka();
  std::size_t inside = 0;
  for (const auto& r : s2.records) {
    EXPECT_GE(r.config.number("obstacles"), 1.0);
    EXPECT_EQ(r.stage, Stage::Stage2);
    inside += e.contains(r.config);
  }
  EXPECT_EQ(inside, emphasis_count(0.30, 1000));
  EXPECT_EQ(dump(s2), dump(run_stage2(s1, 1000, 2024, {}, {"builtin", 1})));
  const BoundaryRegion region = parse_region(s2.manifest.at("region").get<std::string>());
  for (const auto& r : s2.records)
    for (const auto& [dim, entry] : region.dims) EXPECT_TRUE(entry.range.contains(r.config.number(dim)));
}

TEST(Stage2, NoEmphasisWithoutFrictionAndMass) {
  const Dataset s1 = run_stage1("ur5e-5d", 500, 1, {"builtin", 1});
  EXPECT_TRUE(emphasis_for_space(s1.space, 0.3).clauses.empty());
  const Dataset s2 = run_stage2(s1, 200, 2, {}, {"builtin", 1});
  EXPECT_EQ(s2.records.size(), 200u);
}

TEST(Analyze, ReReadMatchesInMemory) {
  TempDir dir("dg_pipeline_reread");
  const Dataset s1 = run_stage1("franka-8d", 3000, 2026, {"builtin", 1});
  write_dataset(dir.path() / "s1.jsonl", s1);
  AnalyzeOptions opts;
  opts.bootstrap_iters = 60;
  opts.threads = 1;
  const AnalysisReport a = run_analyze({s1}, opts);
  const AnalysisReport b = run_analyze({read_dataset(dir.path() / "s1.jsonl")}, opts);
  EXPECT_EQ(a.data, b.data);
  EXPECT_EQ(a.region, b.region);
  EXPECT_EQ(a.risk_model, b.risk_model);
  EXPECT_EQ(a.interaction_model, b.interaction_model);
  EXPECT_EQ(a.roc.auc, b.roc.auc);
  EXPECT_EQ(a.zones, b.zones);
  ASSERT_EQ(a.thresholds.size(), b.thresholds.size());
  for (std::size_t i = 0; i < a.thresholds.size(); ++i) {
    ASSERT_EQ(a.thresholds[i].estimate.has_value(), b.thresholds[i].estimate.has_value());
    if (a.thresholds[i].estimate) EXPECT_EQ(a.thresholds[i].estimate->threshold, b.thresholds[i].estimate->threshold);
  }
  const auto fa = write_analysis(a, dir.path() / "a", opts);
  const auto fb = write_analysis(b, dir.path() / "b", opts);
  ASSERT_EQ(fa.size(), fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_EQ(slurp(fa[i]), slurp(fb[i])) << fa[i];
}

TEST(Analyze, BoundaryFitRecoversOracle) {
  const Dataset s1 = run_stage1("franka-8d", 10000, 2026, {"builtin", 0});
  const Dataset s2 = run_stage2(s1, 10000, 2024, {}, {"builtin", 0});
  AnalyzeOptions opts;
  opts.thresholds = false;
  const AnalysisReport rep = run_analyze({s1, s2}, opts);
  EXPECT_EQ(rep.data.records.size(), 20000u);
  ASSERT_TRUE(rep.boundary_fit);
  const BoundaryFit& b = *rep.boundary_fit;
  EXPECT_LE(std::abs(b.b0 - ref::kB0), 3 * b.se0);
  EXPECT_LE(std::abs(b.b1 - ref::kMu), 3 * b.se1);
  EXPECT_LE(std::abs(b.b2 - ref::kM), 3 * b.se2);
  EXPECT_LE(std::abs(b.b3 - ref::kMuM), 3 * b.se3);
  ASSERT_FALSE(rep.curve.empty());
  for (const auto& p : rep.curve)
    EXPECT_LT(std::abs(b.b0 + b.b1 * p.friction + b.b2 * p.mass + b.b3 * p.friction * p.mass), 1e-9);
}

TEST(Analyze, FigureData) {
  const Dataset s1 = run_stage1("franka-8d", 10000, 2026, {"builtin", 0});
  AnalyzeOptions opts;
  opts.thresholds = false;
  const AnalysisReport rep = run_analyze({s1}, opts);
  ASSERT_EQ(rep.heat_axes, (std::vector<std::string>{"friction", "mass"}));
  ASSERT_EQ(rep.heatmap.size(), 100u);
  std::size_t total = 0;
  for (const auto& c : rep.heatmap) total += c.n;
  EXPECT_EQ(total, 10000u);
  const auto sr = [&](std::size_t i) { return rep.heatmap[i].sr.value(); };
  // Row-major over friction: index 9 is (lowest friction, highest mass).
  EXPECT_LT(sr(9), sr(0));
  EXPECT_LT(sr(9), sr(90));
  EXPECT_LT(sr(9), sr(99));
  EXPECT_EQ(rep.roc.curve.front().fpr, 0.0);
  EXPECT_EQ(rep.roc.curve.front().tpr, 0.0);
  EXPECT_EQ(rep.roc.curve.back().fpr, 1.0);
  EXPECT_EQ(rep.roc.curve.back().tpr, 1.0);
  EXPECT_GT(rep.roc.auc, 0.6);

  TempDir dir("dg_pipeline_figs");
  const auto files = write_figures(rep, dir.path(), opts);
  EXPECT_EQ(files.size(), 4u);
  std::ifstream roc(dir.path() / "roc.csv");
  std::string header, first, line, last;
  std::getline(roc, header);
  std::getline(roc, first);
  while (std::getline(roc, line)) last = line;
  EXPECT_NE(first.find("0,0"), std::string::npos) << first;
  EXPECT_NE(last.find("1,1"), std::string::npos) << last;
  std::ifstream scatter(dir.path() / "scatter.csv");
  std::size_t rows = 0;
  while (std::getline(scatter, line)) ++rows;
  EXPECT_EQ(rows, 3001u);
}

TEST(Analyze, WritesEveryArtifact) {
  TempDir dir("dg_pipeline_all");
  AnalyzeOptions opts;
  opts.bootstrap_iters = 40;
  const AnalysisReport rep = run_analyze({run_stage1("franka-8d", 2000, 5, {"builtin", 1})}, opts);
  write_analysis(rep, dir.path(), opts);
  for (const char* f : {"heatmap.csv", "roc.csv", "boundary_curve.csv", "scatter.csv", "boundary_region.txt",
                        "detection_report.txt", "interaction_model.txt", "boundary_fit.txt", "thresholds.txt",
                        "risk_model.txt", "risk_coefficients.txt", "zones.txt", "summary.json"})
    EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
  std::ifstream model(dir.path() / "risk_model.txt");
  EXPECT_EQ(read_model(model), rep.risk_model);
  const auto summary = nlohmann::json::parse(slurp(dir.path() / "summary.json"));
  EXPECT_TRUE(summary.contains("auc"));
  EXPECT_THROW(run_analyze({}), DomainError);
}

TEST(Analyze, Ur5eHasNoBoundaryFit) {
  AnalyzeOptions opts;
  opts.bootstrap_iters = 30;
  const AnalysisReport rep = run_analyze({run_stage1("ur5e-5d", 1500, 2, {"builtin", 1})}, opts);
  EXPECT_FALSE(rep.boundary_fit);
  EXPECT_FALSE(rep.interaction_model);
  EXPECT_EQ(rep.heat_axes, (std::vector<std::string>{"ik_noise", "mass"}));
}

TEST(GateRun, Examples) {
  const Dataset base = run_stage1("franka-8d", 200, 1, {"builtin", 1});
  const GateDecision ok = run_gate(with_outcomes(base, FailureType::None, 0), {3.5, 0.05, 1.0});
  EXPECT_TRUE(ok.pass);
  EXPECT_DOUBLE_EQ(ok.confidence, 100.0);
  const GateDecision bad = run_gate(with_outcomes(base, FailureType::Collision, 1), {3.5, 0.05, 1.0});
  EXPECT_FALSE(bad.pass);
  EXPECT_LE(bad.confidence, 75.0);
  EXPECT_EQ(bad.failing, std::vector<std::string>{"collision"});
  Dataset empty(franka_space());
  EXPECT_THROW(run_gate(empty, {3.5, 0.05, 1.0}), DomainError);
}

TEST(GateRun, EdgeTagging) {
  const Dataset ds = with_outcomes(run_stage1("franka-8d", 300, 1, {"builtin", 1}), FailureType::Timeout, 0);
  const auto by_placement = gate_episodes(ds, {});
  const auto by_clause = gate_episodes(ds, parse_predicate("friction<0.1"));
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    EXPECT_EQ(by_placement[i].edge, ds.records[i].config.label("placement").rfind("edge_", 0) == 0);
    EXPECT_EQ(by_clause[i].edge, ds.records[i].config.number("friction") < 0.1);
  }
}
