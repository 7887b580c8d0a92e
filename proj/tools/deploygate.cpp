// deploygate: command-line front end of the validation pipeline.
//
//   deploygate stage1 --space franka-8d --n 10000 --seed 2026 --out stage1.jsonl
//   deploygate stage2 --input stage1.jsonl --n 10000 --seed 2024 --out stage2.jsonl
//   deploygate analyze stage1.jsonl stage2.jsonl --out report/
//   deploygate gate --input episodes.jsonl --baseline-cycle 3.5
//   deploygate monitor --events events.jsonl
//   deploygate serve --port 5555
//
// Exit codes: 0 success, 1 usage, 2 data or schema error, 3 gate failure.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "deploygate/pipeline.hpp"
#include "deploygate/monitor.hpp"

namespace dg = deploygate;

namespace {

constexpr int kUsage = 1;
constexpr int kDataError = 2;
constexpr int kGateFail = 3;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::pair<double, double> parse_window(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw CLI::ValidationError("--sr-window", "expected lo,hi");
  const double lo = dg::parse_number(text.substr(0, comma));
  const double hi = dg::parse_number(text.substr(comma + 1));
  if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) throw CLI::ValidationError("--sr-window", "need 0 <= lo <= hi <= 1");
  return {lo, hi};
}

/// Writes the dataset and a sidecar <out>.run.json carrying the manifest plus
/// wall-clock details; the dataset itself holds no timestamps.
void write_with_sidecar(const std::string& out, const dg::Dataset& ds, const std::string& started,
                        const std::vector<std::string>& argv, std::size_t threads) {
  dg::write_dataset(std::filesystem::path(out), ds);
  nlohmann::ordered_json side;
  side["manifest"] = ds.manifest;
  side["output"] = out;
  side["argv"] = argv;
  side["threads"] = threads;
  side["started"] = started;
  side["finished"] = utc_now();
  const auto c = ds.counts();
  side["counts"] = {{"n", c.n}, {"n_success", c.n_success}, {"n_fail", c.n_fail}};
  std::ofstream f(out + ".run.json", std::ios::trunc);
  f << side.dump(2) << '\n';
}

void print_summary(const dg::Dataset& ds, const std::string& out) {
  const auto c = ds.counts();
  std::cout << out << ": " << c.n << " records, " << c.n_success << " success, " << c.n_fail << " fail";
  if (c.n > 0) std::printf(" (SR %.2f%%)", 100.0 * ds.success_rate());
  std::cout << '\n';
}

std::atomic<dg::OracleServer*> g_server{nullptr};
extern "C" void on_signal(int) {
  if (auto* s = g_server.load()) s->request_stop();
}

struct Common {
  std::string oracle = "builtin";
  std::size_t threads = 0;
  double timeout_s = 30.0;

  dg::RunOptions run() const {
    dg::RunOptions o;
    o.oracle = oracle;
    o.threads = threads;
    o.timeout = dg::Millis(static_cast<long long>(timeout_s * 1000.0));
    return o;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--oracle", c.oracle, "builtin or tcp:host:port")->capture_default_str();
  cmd->add_option("--threads", c.threads, "worker threads (0 = all cores)")->capture_default_str();
  cmd->add_option("--timeout", c.timeout_s, "remote oracle timeout in seconds")->capture_default_str()->check(CLI::PositiveNumber);
}

int replay(const std::string& input, const std::string& out, const Common& common,
           const std::vector<std::string>& argv) {
  const std::string started = utc_now();
  const dg::Dataset original = dg::read_dataset(std::filesystem::path(input));
  const auto& m = original.manifest;
  if (!m.is_object() || !m.contains("command")) throw dg::SchemaError("file carries no manifest");
  const std::string cmd = m["command"].get<std::string>();
  dg::RunOptions opts = common.run();
  if (opts.oracle == "builtin" && m.contains("oracle")) opts.oracle = m["oracle"].get<std::string>();
  dg::Dataset ds(original.space);
  if (cmd == "stage1") {
    ds = dg::run_stage1(m["space"].get<std::string>(), m["n"].get<std::size_t>(), m["seed"].get<std::uint64_t>(), opts);
  } else {
    throw dg::SchemaError("replay supports stage1 manifests; rerun '" + cmd + "' with its recorded flags");
  }
  write_with_sidecar(out, ds, started, argv, common.threads);
  print_summary(ds, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deployment-risk validation pipeline"};
  app.require_subcommand(1);
  std::vector<std::string> args(argv, argv + argc);

  // stage1
  Common s1c;
  std::string s1_space = "franka-8d", s1_out = "stage1.jsonl";
  std::size_t s1_n = 10000;
  std::uint64_t s1_seed = 2026;
  auto* s1 = app.add_subcommand("stage1", "uniform LHS sweep of a built-in space");
  s1->add_option("--space", s1_space, "franka-8d or ur5e-5d")->capture_default_str();
  s1->add_option("--n", s1_n, "number of configurations")->capture_default_str()->check(CLI::PositiveNumber);
  s1->add_option("--seed", s1_seed)->capture_default_str();
  s1->add_option("--out", s1_out)->capture_default_str();
  add_common(s1, s1c);

  // stage2
  Common s2c;
  std::string s2_in, s2_out = "stage2.jsonl", s2_window = "0.30,0.70";
  std::size_t s2_n = 10000, s2_bins = 10;
  std::uint64_t s2_seed = 2024;
  double s2_fraction = 0.30;
  std::int64_t s2_obs = 1;
  auto* s2 = app.add_subcommand("stage2", "boundary-focused sweep from a stage-1 dataset");
  s2->add_option("--input", s2_in, "stage-1 dataset")->required();
  s2->add_option("--n", s2_n)->capture_default_str()->check(CLI::PositiveNumber);
  s2->add_option("--seed", s2_seed)->capture_default_str();
  s2->add_option("--out", s2_out)->capture_default_str();
  s2->add_option("--emphasis-fraction", s2_fraction)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  s2->add_option("--sr-window", s2_window, "lo,hi")->capture_default_str();
  s2->add_option("--bins", s2_bins)->capture_default_str()->check(CLI::Range(2, 1000));
  s2->add_option("--obstacle-min", s2_obs)->capture_default_str()->check(CLI::NonNegativeNumber);
  add_common(s2, s2c);

  // analyze / export-figures
  std::vector<std::string> an_in;
  std::string an_out = "report", an_window = "0.30,0.70";
  std::size_t an_bins = 10, an_iters = 1000, an_threads = 0;
  std::uint64_t an_seed = 2026;
  auto* an = app.add_subcommand("analyze", "boundary fit, thresholds, risk model and figure data");
  an->add_option("inputs", an_in, "dataset files, merged in order")->required();
  an->add_option("--out", an_out, "output directory")->capture_default_str();
  an->add_option("--sr-window", an_window)->capture_default_str();
  an->add_option("--bins", an_bins)->capture_default_str()->check(CLI::Range(2, 1000));
  an->add_option("--bootstrap-iters", an_iters)->capture_default_str()->check(CLI::PositiveNumber);
  an->add_option("--seed", an_seed)->capture_default_str();
  an->add_option("--threads", an_threads)->capture_default_str();

  std::vector<std::string> fig_in;
  std::string fig_out = "figures";
  std::uint64_t fig_seed = 2026;
  auto* fig = app.add_subcommand("export-figures", "heatmap, ROC, boundary curve and scatter CSVs");
  fig->add_option("inputs", fig_in)->required();
  fig->add_option("--out", fig_out)->capture_default_str();
  fig->add_option("--seed", fig_seed)->capture_default_str();

  // gate
  std::string g_in, g_edge;
  dg::Baseline g_base{3.5, 0.05, 1.0};
  bool g_json = false;
  auto* g = app.add_subcommand("gate", "five-metric deployment gate over a dataset");
  g->add_option("--input", g_in)->required();
  g->add_option("--baseline-cycle", g_base.cycle_time, "seconds")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--baseline-miss-rate", g_base.miss_rate)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  g->add_option("--baseline-sr", g_base.sr)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  g->add_option("--edge", g_edge, "predicate marking edge-case episodes, e.g. friction<0.1");
  g->add_flag("--json", g_json, "machine-readable report");

  // monitor
  std::string m_events, m_out;
  std::vector<std::string> m_baselines;
  dg::MonitorConfig m_cfg;
  auto* mon = app.add_subcommand("monitor", "replay an event stream through the drift monitor");
  mon->add_option("--events", m_events, "JSON lines: {recipe, timestamp, success} or {recipe, baseline_sr}")->required();
  mon->add_option("--baseline", m_baselines, "recipe=sr, repeatable");
  mon->add_option("--window", m_cfg.window_size)->capture_default_str()->check(CLI::PositiveNumber);
  mon->add_option("--warn", m_cfg.warn_drop)->capture_default_str();
  mon->add_option("--critical", m_cfg.critical_drop)->capture_default_str();
  mon->add_flag("--relative", m_cfg.relative, "declines relative to baseline");
  mon->add_flag("--debounce", m_cfg.debounce, "report level changes only");
  mon->add_option("--out", m_out, "alert log (default stdout)");

  // serve
  dg::ServerConfig sv;
  sv.port = 5555;
  auto* serve = app.add_subcommand("serve", "reference oracle server (line-delimited JSON over TCP)");
  serve->add_option("--host", sv.host)->capture_default_str();
  serve->add_option("--port", sv.port)->capture_default_str();
  serve->add_option("--seed", sv.seed)->capture_default_str();
  serve->add_option("--space", sv.space)->capture_default_str();
  serve->add_option("--max-connections", sv.max_connections)->capture_default_str()->check(CLI::PositiveNumber);

  // csv
  std::string csv_in, csv_out;
  auto* csv = app.add_subcommand("csv", "flat CSV export of a dataset");
  csv->add_option("--input", csv_in)->required();
  csv->add_option("--out", csv_out)->required();

  // replay
  Common rc;
  std::string rp_in, rp_out;
  auto* rp = app.add_subcommand("replay", "re-run a stage-1 file from its embedded manifest");
  rp->add_option("input", rp_in)->required();
  rp->add_option("--out", rp_out)->required();
  add_common(rp, rc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*s1) {
      const std::string started = utc_now();
      const auto ds = dg::run_stage1(s1_space, s1_n, s1_seed, s1c.run());
      write_with_sidecar(s1_out, ds, started, args, s1c.threads);
      print_summary(ds, s1_out);
    } else if (*s2) {
      const std::string started = utc_now();
      dg::Stage2Options o;
      std::tie(o.sr_lo, o.sr_hi) = parse_window(s2_window);
      o.emphasis_fraction = s2_fraction;
      o.bins = s2_bins;
      o.obstacle_min = s2_obs;
      const auto stage1 = dg::read_dataset(std::filesystem::path(s2_in));
      auto ds = dg::run_stage2(stage1, s2_n, s2_seed, o, s2c.run());
      ds.manifest["input"] = s2_in;
      write_with_sidecar(s2_out, ds, started, args, s2c.threads);
      print_summary(ds, s2_out);
    } else if (*an || *fig) {
      dg::AnalyzeOptions o;
      std::vector<dg::Dataset> inputs;
      for (const auto& p : *an ? an_in : fig_in) inputs.push_back(dg::read_dataset(std::filesystem::path(p)));
      std::vector<std::filesystem::path> written;
      if (*an) {
        std::tie(o.sr_lo, o.sr_hi) = parse_window(an_window);
        o.bins = an_bins;
        o.bootstrap_iters = an_iters;
        o.seed = an_seed;
        o.threads = an_threads;
        const auto rep = dg::run_analyze(inputs, o);
        written = dg::write_analysis(rep, an_out, o);
        std::cout << dg::format_detection_report(rep.region);
      } else {
        o.seed = fig_seed;
        o.thresholds = false;
        written = dg::write_figures(dg::run_analyze(inputs, o), fig_out, o);
      }
      for (const auto& p : written) std::cout << "wrote " << p.string() << '\n';
    } else if (*g) {
      const auto ds = dg::read_dataset(std::filesystem::path(g_in));
      const auto edge = g_edge.empty() ? std::vector<dg::Clause>{} : dg::parse_predicate(g_edge);
      const auto d = dg::run_gate(ds, g_base, edge);
      std::cout << (g_json ? dg::render_gate_json(d) : dg::render_gate_text(d));
      return d.pass ? 0 : kGateFail;
    } else if (*mon) {
      dg::DriftMonitor monitor(m_cfg);
      for (const auto& b : m_baselines) {
        const auto eq = b.rfind('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--baseline", "expected recipe=sr");
        monitor.register_recipe(b.substr(0, eq), dg::parse_number(b.substr(eq + 1)));
      }
      std::ifstream events(m_events);
      if (!events) throw dg::Error("cannot open " + m_events);
      std::ofstream file;
      std::ostream* sink = &std::cout;
      if (!m_out.empty()) {
        file.open(m_out, std::ios::trunc);
        sink = &file;
      }
      const auto alerts = dg::replay_events(monitor, events, sink);
      std::cerr << alerts.size() << " alerts\n";
    } else if (*serve) {
      dg::OracleServer server(sv);
      server.bind();
      g_server.store(&server);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << sv.space << " on " << sv.host << ":" << server.port() << " (seed " << sv.seed << ")\n";
      server.serve();
      g_server.store(nullptr);
      std::cerr << server.requests() << " requests served\n";
    } else if (*csv) {
      const auto ds = dg::read_dataset(std::filesystem::path(csv_in));
      std::ofstream out(csv_out, std::ios::trunc);
      if (!out) throw dg::Error("cannot open " + csv_out);
      dg::write_csv(out, ds);
    } else if (*rp) {
      return replay(rp_in, rp_out, rc, args);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return 0;
}
