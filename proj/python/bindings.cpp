#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "deploygate/boundary.hpp"
#include "deploygate/error.hpp"
#include "deploygate/monitor.hpp"
#include "deploygate/pipeline.hpp"
#include "deploygate/remote.hpp"
#include "deploygate/risk_model.hpp"
#include "deploygate/sampler.hpp"

namespace py = pybind11;
namespace dg = deploygate;

namespace {

py::object value_to_py(const dg::ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return py::float_(*d);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return py::int_(*i);
  return py::str(std::get<std::string>(v));
}

dg::ScenarioConfig config_from_dict(const dg::ParamSpace& space, const py::dict& values, std::uint64_t sample_idx) {
  dg::ScenarioConfig cfg;
  cfg.space = space.name();
  cfg.sample_idx = sample_idx;
  for (const auto& d : space.dims()) {
    if (!values.contains(d.name())) throw dg::SchemaError(d.name() + " missing");
    py::handle v = values[py::str(d.name())];
    switch (d.kind()) {
      case dg::ParamKind::Categorical: cfg.values[d.name()] = v.cast<std::string>(); break;
      case dg::ParamKind::Integer: cfg.values[d.name()] = v.cast<std::int64_t>(); break;
      default: cfg.values[d.name()] = v.cast<double>(); break;
    }
  }
  if (auto p = dg::validate_config(space, cfg); !p.empty()) throw dg::DomainError(p.front());
  return cfg;
}

py::dict record_to_dict(const dg::ParamSpace& space, const dg::ExperimentRecord& r) {
  py::dict d;
  for (const auto& def : space.dims()) d[py::str(def.name())] = value_to_py(r.config.values.at(def.name()));
  const auto& o = r.outcome;
  d["success"] = o.success;
  d["failure_type"] = std::string(dg::to_string(o.failure_type));
  d["cycle_time"] = o.cycle_time;
  d["collision"] = o.collision;
  d["drop"] = o.drop;
  d["grasp_miss"] = o.grasp_miss;
  d["fail_prob"] = o.fail_prob;
  d["zone"] = std::string(dg::to_string(r.zone));
  d["sample_idx"] = r.config.sample_idx;
  d["robot"] = r.robot;
  d["stage"] = std::string(dg::to_string(r.stage));
  d["seed"] = r.seed;
  return d;
}

py::dict region_to_dict(const dg::BoundaryRegion& region) {
  py::dict out;
  for (const auto& [name, e] : region.dims)
    out[py::str(name)] = py::make_tuple(e.range.lo, e.range.hi, std::string(dg::to_string(e.source)));
  return out;
}

py::dict threshold_to_dict(const dg::ThresholdEstimate& t) {
  py::dict d;
  d["dim"] = t.dim;
  d["threshold"] = t.threshold;
  d["ci95"] = py::make_tuple(t.ci_lo, t.ci_hi);
  d["se"] = t.se;
  d["iterations"] = t.iterations;
  d["discarded"] = t.discarded;
  return d;
}

dg::FeatureSpec spec_named(const dg::ParamSpace& space, const std::string& kind) {
  if (kind == "risk") return dg::risk_feature_spec(space);
  if (kind == "interaction") return dg::interaction_feature_spec(space);
  if (kind == "boundary") return dg::boundary_feature_spec();
  throw dg::DomainError("feature set must be risk, interaction or boundary");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Deployment-risk validation pipeline (C++ core)";

  auto base = py::register_exception<dg::Error>(m, "DeployGateError", PyExc_RuntimeError);
  py::register_exception<dg::DomainError>(m, "DomainError", base.ptr());
  py::register_exception<dg::SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<dg::SpaceMismatch>(m, "SpaceMismatch", base.ptr());
  py::register_exception<dg::NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<dg::RemoteError>(m, "RemoteError", base.ptr());

  py::class_<dg::ParamSpace>(m, "ParamSpace")
      .def_property_readonly("name", &dg::ParamSpace::name)
      .def_property_readonly("dims",
                             [](const dg::ParamSpace& s) {
                               py::list out;
                               for (const auto& d : s.dims()) {
                                 py::dict e;
                                 e["name"] = d.name();
                                 e["kind"] = std::string(dg::to_string(d.kind()));
                                 if (d.kind() == dg::ParamKind::Categorical) e["categories"] = d.categories();
                                 else e["range"] = py::make_tuple(d.lo(), d.hi());
                                 out.append(e);
                               }
                               return out;
                             })
      .def("fallback",
           [](const dg::ParamSpace& s, const std::string& dim) -> py::object {
             if (auto r = s.fallback(dim)) return py::make_tuple(r->lo, r->hi);
             return py::none();
           })
      .def("__len__", [](const dg::ParamSpace& s) { return s.dims().size(); })
      .def("__repr__", [](const dg::ParamSpace& s) { return "<ParamSpace " + s.name() + ">"; });

  m.def("builtin_space", &dg::builtin_space, py::arg("name"));
  m.def("franka_space", &dg::franka_space);
  m.def("ur5e_space", &dg::ur5e_space);

  m.def(
      "lhs_unit",
      [](std::size_t n, std::size_t d, std::uint64_t seed) {
        const auto u = dg::lhs_unit(n, d, seed);
        std::vector<std::vector<double>> out(n, std::vector<double>(d));
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) out[i][j] = u(i, j);
        return out;
      },
      py::arg("n"), py::arg("d"), py::arg("seed"));

  m.def("zone_for_sr", [](double sr) { return std::string(dg::to_string(dg::zone_for_sr(sr))); }, py::arg("sr"));

  py::class_<dg::Dataset>(m, "Dataset")
      .def_property_readonly("space", [](const dg::Dataset& d) { return d.space; })
      .def_readonly("robot", &dg::Dataset::robot)
      .def_readonly("stage", &dg::Dataset::stage)
      .def_readonly("seed", &dg::Dataset::seed)
      .def("__len__", [](const dg::Dataset& d) { return d.records.size(); })
      .def("counts",
           [](const dg::Dataset& d) {
             const auto c = d.counts();
             return py::make_tuple(c.n, c.n_success, c.n_fail);
           })
      .def("success_rate", &dg::Dataset::success_rate)
      .def("record", [](const dg::Dataset& d, std::size_t i) { return record_to_dict(d.space, d.records.at(i)); })
      .def("records",
           [](const dg::Dataset& d) {
             py::list out;
             for (const auto& r : d.records) out.append(record_to_dict(d.space, r));
             return out;
           })
      .def("write", [](const dg::Dataset& d, const std::filesystem::path& p) { dg::write_dataset(p, d); })
      .def("to_csv",
           [](const dg::Dataset& d) {
             std::ostringstream s;
             dg::write_csv(s, d);
             return s.str();
           })
      .def("__eq__", [](const dg::Dataset& a, const dg::Dataset& b) { return a == b; });

  m.def("read_dataset", [](const std::filesystem::path& p) { return dg::read_dataset(p); }, py::arg("path"));
  m.def("merge_datasets", &dg::merge_datasets, py::arg("a"), py::arg("b"));

  m.def(
      "run_stage1",
      [](const std::string& space, std::size_t n, std::uint64_t seed, const std::string& oracle, std::size_t threads) {
        dg::RunOptions o;
        o.oracle = oracle;
        o.threads = threads;
        py::gil_scoped_release release;
        return dg::run_stage1(space, n, seed, o);
      },
      py::arg("space") = "franka-8d", py::arg("n") = 10000, py::arg("seed") = 2026, py::arg("oracle") = "builtin",
      py::arg("threads") = 0);

  m.def(
      "run_stage2",
      [](const dg::Dataset& stage1, std::size_t n, std::uint64_t seed, double emphasis_fraction, std::size_t threads) {
        dg::Stage2Options s2;
        s2.emphasis_fraction = emphasis_fraction;
        dg::RunOptions o;
        o.threads = threads;
        py::gil_scoped_release release;
        return dg::run_stage2(stage1, n, seed, s2, o);
      },
      py::arg("stage1"), py::arg("n") = 10000, py::arg("seed") = 2024, py::arg("emphasis_fraction") = 0.30,
      py::arg("threads") = 0);

  m.def(
      "detect_boundary",
      [](const dg::Dataset& ds, double sr_lo, double sr_hi, std::size_t bins) {
        return region_to_dict(dg::detect_boundary(ds, ds.space, sr_lo, sr_hi, bins));
      },
      py::arg("ds"), py::arg("sr_lo") = 0.30, py::arg("sr_hi") = 0.70, py::arg("bins") = 10);

  m.def(
      "bin_success_rates",
      [](const dg::Dataset& ds, const std::string& dim, std::size_t k) {
        py::list out;
        for (const auto& b : dg::bin_success_rates(ds, dim, k)) {
          py::dict e;
          e["lo"] = b.lo;
          e["hi"] = b.hi;
          e["n"] = b.n;
          e["n_success"] = b.n_success;
          e["sr"] = b.sr ? py::object(py::float_(*b.sr)) : py::object(py::none());
          out.append(e);
        }
        return out;
      },
      py::arg("ds"), py::arg("dim"), py::arg("k") = 10);

  py::class_<dg::RiskModel>(m, "RiskModel")
      .def_readonly("names", &dg::RiskModel::names)
      .def_readonly("coef", &dg::RiskModel::coef)
      .def_readonly("converged", &dg::RiskModel::converged)
      .def_readonly("iterations", &dg::RiskModel::iterations)
      .def("wald",
           [](const dg::RiskModel& model) {
             py::list out;
             for (const auto& w : dg::wald_stats(model)) {
               py::dict e;
               e["name"] = w.name;
               e["coef"] = w.coef;
               e["se"] = w.se;
               e["z"] = w.z;
               e["p"] = w.p;
               out.append(e);
             }
             return out;
           })
      .def("predict_fail_prob",
           [](const dg::RiskModel& model, const dg::ParamSpace& space, const py::dict& cfg) {
             return dg::predict_fail_prob(model, config_from_dict(space, cfg, 0));
           })
      .def("table", &dg::format_coefficient_table)
      .def("dumps",
           [](const dg::RiskModel& model) {
             std::ostringstream s;
             dg::write_model(s, model);
             return s.str();
           })
      .def_static("loads", [](const std::string& text) {
        std::istringstream s(text);
        return dg::read_model(s);
      });

  m.def(
      "fit_risk_model",
      [](const dg::Dataset& ds, const std::string& features, const std::string& target, double ridge) {
        if (target != "success" && target != "failure") throw dg::DomainError("target must be success or failure");
        const auto spec = spec_named(ds.space, features);
        py::gil_scoped_release release;
        return dg::fit_risk_model(ds, spec, target == "success" ? dg::Target::Success : dg::Target::Failure, ridge);
      },
      py::arg("ds"), py::arg("features") = "risk", py::arg("target") = "failure", py::arg("ridge") = 1e-6);

  m.def(
      "roc_auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        const auto r = dg::roc_auc(scores, labels);
        std::vector<std::tuple<double, double, double>> curve;
        for (const auto& p : r.curve) curve.emplace_back(p.threshold, p.fpr, p.tpr);
        return py::make_tuple(r.auc, curve);
      },
      py::arg("scores"), py::arg("labels"));

  m.def("boundary_curve", &dg::boundary_curve, py::arg("b0"), py::arg("b1"), py::arg("b2"), py::arg("b3"), py::arg("m"));

  m.def(
      "bootstrap_threshold",
      [](const dg::Dataset& ds, const std::string& dim, std::size_t iters, std::uint64_t seed) {
        dg::ThresholdEstimate t;
        {
          py::gil_scoped_release release;
          t = dg::bootstrap_threshold(ds, dim, iters, seed);
        }
        return threshold_to_dict(t);
      },
      py::arg("ds"), py::arg("dim"), py::arg("iters") = 1000, py::arg("seed") = 2026);

  m.def(
      "confidence_score",
      [](double sr, double mean_cycle, double baseline_cycle, std::size_t collisions, double edge_sr,
         double baseline_sr) {
        dg::MetricReport r;
        r.sr = sr;
        r.mean_cycle = mean_cycle;
        r.baseline_cycle = baseline_cycle;
        r.collisions = collisions;
        r.edge_sr = edge_sr;
        r.baseline_sr = baseline_sr;
        return dg::confidence_score(r);
      },
      py::arg("sr"), py::arg("mean_cycle"), py::arg("baseline_cycle"), py::arg("collisions"), py::arg("edge_sr"),
      py::arg("baseline_sr"));

  m.def(
      "run_gate",
      [](const dg::Dataset& ds, double baseline_cycle, double baseline_miss_rate, double baseline_sr,
         const std::string& edge) {
        const auto clauses = edge.empty() ? std::vector<dg::Clause>{} : dg::parse_predicate(edge);
        const auto d = dg::run_gate(ds, dg::Baseline{baseline_cycle, baseline_miss_rate, baseline_sr}, clauses);
        py::dict out;
        out["pass"] = d.pass;
        out["confidence"] = d.confidence;
        out["failing"] = d.failing;
        out["sr"] = d.report.sr;
        out["mean_cycle"] = d.report.mean_cycle;
        out["collisions"] = d.report.collisions;
        out["drop_rate"] = d.report.drop_rate;
        out["miss_rate"] = d.report.miss_rate;
        out["edge_sr"] = d.report.edge_sr;
        out["report"] = dg::render_gate_text(d);
        return out;
      },
      py::arg("ds"), py::arg("baseline_cycle") = 3.5, py::arg("baseline_miss_rate") = 0.05,
      py::arg("baseline_sr") = 1.0, py::arg("edge") = "");

  py::class_<dg::DriftMonitor>(m, "DriftMonitor")
      .def(py::init([](std::size_t window, double warn, double critical, bool relative, bool debounce) {
             dg::MonitorConfig c;
             c.window_size = window;
             c.warn_drop = warn;
             c.critical_drop = critical;
             c.relative = relative;
             c.debounce = debounce;
             return std::make_unique<dg::DriftMonitor>(c);
           }),
           py::arg("window") = 100, py::arg("warn") = 0.05, py::arg("critical") = 0.10, py::arg("relative") = false,
           py::arg("debounce") = false)
      .def("register", &dg::DriftMonitor::register_recipe, py::arg("recipe"), py::arg("baseline_sr"))
      .def(
          "ingest",
          [](dg::DriftMonitor& mon, const std::string& recipe, bool success) {
            return std::string(dg::to_string(mon.ingest(recipe, success)));
          },
          py::arg("recipe"), py::arg("success"))
      .def("window_sr", &dg::DriftMonitor::window_sr, py::arg("recipe"));

  py::class_<dg::OracleServer>(m, "OracleServer")
      .def(py::init([](const std::string& space, std::uint64_t seed, std::uint16_t port) {
             dg::ServerConfig c;
             c.space = space;
             c.seed = seed;
             c.port = port;
             return std::make_unique<dg::OracleServer>(c);
           }),
           py::arg("space") = "franka-8d", py::arg("seed") = 2026, py::arg("port") = 0)
      .def("start", &dg::OracleServer::start)
      .def("stop", &dg::OracleServer::stop, py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("port", &dg::OracleServer::port)
      .def_property_readonly("requests", &dg::OracleServer::requests);
}
