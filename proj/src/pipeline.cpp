#include "deploygate/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <tuple>
#include <cmath>
#include <algorithm>

#include "deploygate/binning.hpp"
#include "deploygate/error.hpp"
#include "deploygate/parallel.hpp"
#include "deploygate/rng.hpp"

namespace deploygate {

namespace {

constexpr const char* kToolVersion = "0.1.0";

ExperimentRecord make_record(const ScenarioConfig& cfg, EpisodeOutcome o, const std::string& robot, Stage stage,
                             std::uint64_t seed) {
  ExperimentRecord r;
  r.config = cfg;
  r.outcome = o;
  r.robot = robot;
  r.stage = stage;
  r.seed = seed;
  return r;
}

}  // namespace

Dataset run_batch(const ParamSpace& space, const SampleBatch& batch, const RunOptions& opts) {
  Dataset ds(space);
  ds.robot = robot_for_space(space.name());
  ds.stage = std::string(to_string(batch.stage));
  ds.seed = batch.seed;
  const std::size_t n = batch.configs.size();
  std::vector<EpisodeOutcome> outcomes(n);

  if (opts.oracle == "builtin") {
    const BuiltinOracle oracle(space.name(), batch.seed);
    parallel_for(n, opts.threads, [&](std::size_t, std::size_t i) { outcomes[i] = oracle.evaluate(batch.configs[i]); });
  } else {
    // The remote server derives episode streams from its own seed.
    const Endpoint ep = parse_endpoint(opts.oracle);
    const std::size_t workers = resolve_threads(opts.threads, n);
    std::vector<std::unique_ptr<RemoteOracleClient>> clients(workers);
    parallel_for(n, workers, [&](std::size_t w, std::size_t i) {
      if (!clients[w]) clients[w] = std::make_unique<RemoteOracleClient>(ep, space.name(), opts.timeout);
      outcomes[i] = clients[w]->run(batch.configs[i]);
    });
  }
  ds.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    ds.records.push_back(make_record(batch.configs[i], outcomes[i], ds.robot, batch.stage, batch.seed));
  return label_zones(ds, default_cell_spec(space));
}

Dataset run_stage1(const std::string& space_name, std::size_t n, std::uint64_t seed, const RunOptions& opts) {
  const ParamSpace space = builtin_space(space_name);
  Dataset ds = run_batch(space, sample_stage1(space, n, seed), opts);
  nlohmann::ordered_json m;
  m["command"] = "stage1";
  m["tool_version"] = kToolVersion;
  m["space"] = space.name();
  m["n"] = n;
  m["seed"] = seed;
  m["oracle"] = opts.oracle;
  ds.manifest = std::move(m);
  return ds;
}

EmphasisSpec emphasis_for_space(const ParamSpace& space, double fraction) {
  EmphasisSpec e;
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw DomainError("emphasis fraction out of [0,1]");
  if (space.find("friction") && space.find("mass")) {
    e = emphasis_for_franka();
    e.fraction = fraction;
  }
  return e;
}

Dataset run_stage2(const Dataset& stage1, std::size_t n, std::uint64_t seed, const Stage2Options& s2,
                   const RunOptions& opts) {
  const ParamSpace& space = stage1.space;
  const BoundaryRegion region = detect_boundary(stage1, space, s2.sr_lo, s2.sr_hi, s2.bins);
  const EmphasisSpec emphasis = emphasis_for_space(space, s2.emphasis_fraction);
  Dataset ds = run_batch(space, sample_stage2(space, region, n, seed, emphasis, s2.obstacle_min), opts);
  nlohmann::ordered_json m;
  m["command"] = "stage2";
  m["tool_version"] = kToolVersion;
  m["space"] = space.name();
  m["n"] = n;
  m["seed"] = seed;
  m["oracle"] = opts.oracle;
  m["input_seed"] = stage1.seed;
  m["input_records"] = stage1.records.size();
  m["emphasis"] = format_predicate(emphasis.clauses);
  m["emphasis_fraction"] = emphasis.fraction;
  m["sr_window"] = {s2.sr_lo, s2.sr_hi};
  m["bins"] = s2.bins;
  m["obstacle_min"] = s2.obstacle_min;
  m["region"] = format_region(region);
  ds.manifest = std::move(m);
  return ds;
}

namespace {

std::optional<std::size_t> index_of(const std::vector<std::string>& names, const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  return std::nullopt;
}

bool has_dims(const ParamSpace& space, std::initializer_list<const char*> dims) {
  for (const char* d : dims)
    if (space.find(d) == nullptr) return false;
  return true;
}

}  // namespace

AnalysisReport run_analyze(const std::vector<Dataset>& inputs, const AnalyzeOptions& opts) {
  if (inputs.empty()) throw DomainError("analyze needs at least one dataset");
  Dataset merged = inputs.front();
  for (std::size_t i = 1; i < inputs.size(); ++i) merged = merge_datasets(merged, inputs[i]);
  if (merged.records.empty()) throw DomainError("analyze needs at least one record");
  const ParamSpace& space = merged.space;

  AnalysisReport rep(label_zones(merged, default_cell_spec(space)));
  for (const auto& r : rep.data.records) ++rep.zones[std::string(to_string(r.zone))];
  rep.region = detect_boundary(rep.data, space, opts.sr_lo, opts.sr_hi, opts.bins);

  std::optional<RiskModel> fit;
  if (has_dims(space, {"friction", "mass", "ik_noise", "size", "obstacles"})) {
    rep.interaction_model = fit_risk_model(rep.data, interaction_feature_spec(space));
    fit = rep.interaction_model;
  } else if (has_dims(space, {"friction", "mass"})) {
    fit = fit_risk_model(rep.data, boundary_feature_spec());
  }
  if (fit) {
    const auto& names = fit->names;
    const auto i1 = index_of(names, "raw:friction");
    const auto i2 = index_of(names, "raw:mass");
    const auto i3 = index_of(names, "raw:friction*raw:mass");
    BoundaryFit b;
    b.b0 = fit->coef[0];
    b.b1 = fit->coef[*i1];
    b.b2 = fit->coef[*i2];
    b.b3 = fit->coef[*i3];
    b.se0 = std::sqrt(fit->cov(0, 0));
    b.se1 = std::sqrt(fit->cov(*i1, *i1));
    b.se2 = std::sqrt(fit->cov(*i2, *i2));
    b.se3 = std::sqrt(fit->cov(*i3, *i3));
    rep.boundary_fit = b;
    const ParamDef& mass = space.at("mass");
    const ParamDef& friction = space.at("friction");
    for (std::size_t k = 0; k <= 50; ++k) {
      const double m = mass.lo() + (mass.hi() - mass.lo()) * static_cast<double>(k) / 50.0;
      try {
        const double mu = boundary_curve(b.b0, b.b1, b.b2, b.b3, m);
        rep.curve.push_back({m, mu, friction.range().contains(mu)});
      } catch (const NumericalError&) {
      }
    }
  }

  const auto cont = space.continuous_dims();
  for (std::size_t j = 0; opts.thresholds && j < cont.size(); ++j) {
    ThresholdRow row{cont[j]->name(), std::nullopt};
    try {
      row.estimate = bootstrap_threshold(rep.data, cont[j]->name(), opts.bootstrap_iters,
                                         derive_key(opts.seed, "threshold", j), opts.threads);
    } catch (const NumericalError&) {
    } catch (const DomainError&) {
    }
    rep.thresholds.push_back(std::move(row));
  }

  rep.risk_model = fit_risk_model(rep.data, risk_feature_spec(space), Target::Failure);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& r : rep.data.records) {
    scores.push_back(predict_fail_prob(rep.risk_model, r.config));
    labels.push_back(r.outcome.success ? 0 : 1);
  }
  const auto c = rep.data.counts();
  if (c.n_success > 0 && c.n_fail > 0) rep.roc = roc_auc(scores, labels);

  const CellSpec cells = default_cell_spec(space);
  if (cells.axes.size() == 2) {
    const ParamDef& x = space.at(cells.axes[0].first);
    const ParamDef& y = space.at(cells.axes[1].first);
    const std::size_t kx = cells.axes[0].second, ky = cells.axes[1].second;
    rep.heat_axes = {x.name(), y.name()};
    const auto counts = cell_counts(rep.data, cells);
    for (std::size_t i = 0; i < kx; ++i)
      for (std::size_t k = 0; k < ky; ++k) {
        HeatCell h;
        h.x_lo = bin_edge(x.lo(), x.hi(), kx, i);
        h.x_hi = bin_edge(x.lo(), x.hi(), kx, i + 1);
        h.y_lo = bin_edge(y.lo(), y.hi(), ky, k);
        h.y_hi = bin_edge(y.lo(), y.hi(), ky, k + 1);
        std::tie(h.n, h.n_success) = counts[i * ky + k];
        if (h.n > 0) h.sr = static_cast<double>(h.n_success) / static_cast<double>(h.n);
        rep.heatmap.push_back(h);
      }
  }
  return rep;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + p.string() + " for writing");
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::vector<std::filesystem::path> write_figures(const AnalysisReport& rep, const std::filesystem::path& dir,
                                                 const AnalyzeOptions& opts) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  if (!rep.heatmap.empty()) {
    const auto p = dir / "heatmap.csv";
    auto f = open_out(p);
    const auto& ax = rep.heat_axes;
    f << ax[0] << "_lo," << ax[0] << "_hi," << ax[1] << "_lo," << ax[1] << "_hi,n,n_success,sr\n";
    for (const auto& h : rep.heatmap)
      f << format_number(h.x_lo) << ',' << format_number(h.x_hi) << ',' << format_number(h.y_lo) << ','
        << format_number(h.y_hi) << ',' << h.n << ',' << h.n_success << ',' << (h.sr ? format_number(*h.sr) : "")
        << '\n';
    out.push_back(p);
  }
  if (!rep.roc.curve.empty()) {
    const auto p = dir / "roc.csv";
    auto f = open_out(p);
    write_roc_csv(f, rep.roc);
    out.push_back(p);
  }
  if (!rep.curve.empty()) {
    const auto p = dir / "boundary_curve.csv";
    auto f = open_out(p);
    f << "mass,friction,in_range\n";
    for (const auto& c : rep.curve)
      f << format_number(c.mass) << ',' << format_number(c.friction) << ',' << (c.in_range ? 1 : 0) << '\n';
    out.push_back(p);
  }
  if (!rep.heat_axes.empty()) {
    const auto p = dir / "scatter.csv";
    auto f = open_out(p);
    const std::size_t n = rep.data.records.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Stream s(opts.seed, "scatter");
    const std::size_t take = std::min(n, opts.scatter_points);
    for (std::size_t i = 0; i < take; ++i) std::swap(idx[i], idx[i + s.below(n - i)]);
    idx.resize(take);
    std::sort(idx.begin(), idx.end());
    const auto& ax = rep.heat_axes;
    f << ax[0] << ',' << ax[1] << ",success,zone\n";
    for (std::size_t i : idx) {
      const auto& r = rep.data.records[i];
      f << format_number(r.config.number(ax[0])) << ',' << format_number(r.config.number(ax[1])) << ','
        << (r.outcome.success ? 1 : 0) << ',' << to_string(r.zone) << '\n';
    }
    out.push_back(p);
  }
  return out;
}

std::vector<std::filesystem::path> write_analysis(const AnalysisReport& rep, const std::filesystem::path& dir,
                                                  const AnalyzeOptions& opts) {
  auto out = write_figures(rep, dir, opts);
  auto add = [&](const std::string& name, const std::string& text) {
    const auto p = dir / name;
    auto f = open_out(p);
    f << text;
    out.push_back(p);
  };
  add("boundary_region.txt", format_region(rep.region));
  add("detection_report.txt", format_detection_report(rep.region));
  if (rep.interaction_model) add("interaction_model.txt", format_coefficient_table(*rep.interaction_model));
  if (rep.boundary_fit) {
    const auto& b = *rep.boundary_fit;
    std::string t;
    t += "b0 " + fmt("%.4f", b.b0) + " se " + fmt("%.4f", b.se0) + "\n";
    t += "b1 " + fmt("%.4f", b.b1) + " se " + fmt("%.4f", b.se1) + "\n";
    t += "b2 " + fmt("%.4f", b.b2) + " se " + fmt("%.4f", b.se2) + "\n";
    t += "b3 " + fmt("%.4f", b.b3) + " se " + fmt("%.4f", b.se3) + "\n";
    t += "mu*(m) = -(b0 + b2 m) / (b1 + b3 m)\n";
    for (double m : {0.1, 0.5, 1.0, 1.5, 2.0}) {
      try {
        t += "mu*(" + fmt("%.1f", m) + ") = " + fmt("%.4f", boundary_curve(b.b0, b.b1, b.b2, b.b3, m)) + "\n";
      } catch (const NumericalError&) {
        t += "mu*(" + fmt("%.1f", m) + ") singular\n";
      }
    }
    add("boundary_fit.txt", t);
  }
  {
    std::vector<ThresholdEstimate> ok;
    std::string bad;
    for (const auto& row : rep.thresholds) {
      if (row.estimate) ok.push_back(*row.estimate);
      else bad += row.dim + " unidentifiable\n";
    }
    add("thresholds.txt", format_threshold_table(ok) + bad);
  }
  {
    std::ostringstream s;
    write_model(s, rep.risk_model);
    add("risk_model.txt", s.str());
  }
  if (rep.risk_model.converged) add("risk_coefficients.txt", format_coefficient_table(rep.risk_model));
  {
    std::string z;
    for (const char* name : {"safe", "boundary", "danger"}) {
      auto it = rep.zones.find(name);
      z += std::string(name) + " " + std::to_string(it == rep.zones.end() ? 0 : it->second) + "\n";
    }
    add("zones.txt", z);
  }
  {
    nlohmann::ordered_json j;
    const auto c = rep.data.counts();
    j["space"] = rep.data.space.name();
    j["n"] = c.n;
    j["n_success"] = c.n_success;
    j["n_fail"] = c.n_fail;
    j["success_rate"] = rep.data.success_rate();
    j["auc"] = rep.roc.auc;
    j["risk_model_converged"] = rep.risk_model.converged;
    add("summary.json", j.dump(2) + "\n");
  }
  return out;
}

std::vector<GateEpisode> gate_episodes(const Dataset& ds, const std::vector<Clause>& edge) {
  std::vector<GateEpisode> out;
  out.reserve(ds.records.size());
  for (const auto& r : ds.records) {
    GateEpisode e;
    e.outcome = r.outcome;
    if (!edge.empty()) {
      e.edge = true;
      for (const auto& c : edge) e.edge = e.edge && c.holds(r.config.number(c.dim));
    } else if (r.config.has("placement")) {
      e.edge = r.config.label("placement").rfind("edge_", 0) == 0;
    }
    out.push_back(e);
  }
  return out;
}

GateDecision run_gate(const Dataset& ds, const Baseline& baseline, const std::vector<Clause>& edge) {
  return gate_decision(evaluate_metrics(gate_episodes(ds, edge), baseline));
}

}  // namespace deploygate
