#include "deploygate/dictionary.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "deploygate/binning.hpp"
#include "deploygate/error.hpp"

namespace deploygate {

using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& what, std::ptrdiff_t record, const std::string& field) {
  std::string msg = what;
  if (record >= 0) msg += " at record " + std::to_string(record);
  if (!field.empty()) msg += " (field " + field + ")";
  throw SchemaError(msg, record, field);
}

const ojson& require(const ojson& obj, const std::string& key, std::ptrdiff_t rec) {
  auto it = obj.find(key);
  if (it == obj.end()) fail("missing field", rec, key);
  return *it;
}

bool get_bool(const ojson& obj, const std::string& key, std::ptrdiff_t rec) {
  const ojson& v = require(obj, key, rec);
  if (!v.is_boolean()) fail("expected boolean", rec, key);
  return v.get<bool>();
}

double get_real(const ojson& obj, const std::string& key, std::ptrdiff_t rec) {
  const ojson& v = require(obj, key, rec);
  if (!v.is_number()) fail("expected number", rec, key);
  return v.get<double>();
}

std::uint64_t get_unsigned(const ojson& obj, const std::string& key, std::ptrdiff_t rec) {
  const ojson& v = require(obj, key, rec);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  fail("expected non-negative integer", rec, key);
}

std::string get_string(const ojson& obj, const std::string& key, std::ptrdiff_t rec) {
  const ojson& v = require(obj, key, rec);
  if (!v.is_string()) fail("expected string", rec, key);
  return v.get<std::string>();
}

ojson record_to_json(const ParamSpace& space, const ExperimentRecord& r) {
  ojson j = ojson::object();
  for (const auto& d : space.dims()) {
    const ParamValue& v = r.config.values.at(d.name());
    std::visit([&](const auto& x) { j[d.name()] = x; }, v);
  }
  const EpisodeOutcome& o = r.outcome;
  j["success"] = o.success;
  j["failure_type"] = std::string(to_string(o.failure_type));
  j["cycle_time"] = o.cycle_time;
  j["collision"] = o.collision;
  j["drop"] = o.drop;
  j["grasp_miss"] = o.grasp_miss;
  j["fail_prob"] = o.fail_prob;
  j["zone"] = std::string(to_string(r.zone));
  j["sample_idx"] = r.config.sample_idx;
  j["robot"] = r.robot;
  j["stage"] = std::string(to_string(r.stage));
  j["seed"] = r.seed;
  return j;
}

ExperimentRecord record_from_json(const ParamSpace& space, const ojson& j, std::ptrdiff_t rec) {
  if (!j.is_object()) fail("record is not an object", rec, {});
  ExperimentRecord r;
  r.config.space = space.name();
  for (const auto& d : space.dims()) {
    const ojson& v = require(j, d.name(), rec);
    switch (d.kind()) {
      case ParamKind::ContinuousLinear:
      case ParamKind::ContinuousLog:
        if (!v.is_number()) fail("expected number", rec, d.name());
        r.config.values[d.name()] = v.get<double>();
        break;
      case ParamKind::Integer:
        if (!v.is_number_integer()) fail("expected integer", rec, d.name());
        r.config.values[d.name()] = v.get<std::int64_t>();
        break;
      case ParamKind::Categorical:
        if (!v.is_string()) fail("expected string", rec, d.name());
        r.config.values[d.name()] = v.get<std::string>();
        break;
    }
  }
  EpisodeOutcome& o = r.outcome;
  o.success = get_bool(j, "success", rec);
  try {
    o.failure_type = parse_failure_type(get_string(j, "failure_type", rec));
  } catch (const SchemaError& e) {
    if (e.record() >= 0) throw;
    fail("unknown failure_type", rec, "failure_type");
  }
  o.cycle_time = get_real(j, "cycle_time", rec);
  o.collision = get_bool(j, "collision", rec);
  o.drop = get_bool(j, "drop", rec);
  o.grasp_miss = get_bool(j, "grasp_miss", rec);
  o.fail_prob = get_real(j, "fail_prob", rec);
  const std::string zone = get_string(j, "zone", rec);
  try {
    r.zone = parse_zone(zone);
  } catch (const SchemaError&) {
    fail("unknown zone", rec, "zone");
  }
  r.config.sample_idx = get_unsigned(j, "sample_idx", rec);
  r.robot = get_string(j, "robot", rec);
  try {
    r.stage = parse_stage(get_string(j, "stage", rec));
  } catch (const SchemaError& e) {
    if (e.record() >= 0) throw;
    fail("unknown stage", rec, "stage");
  }
  r.seed = get_unsigned(j, "seed", rec);
  if (auto v = record_violations(space, r); !v.empty()) fail(v.front(), rec, {});
  return r;
}

}  // namespace

std::string_view to_string(Zone z) {
  switch (z) {
    case Zone::Safe: return "safe";
    case Zone::Boundary: return "boundary";
    case Zone::Danger: return "danger";
  }
  return "?";
}

Zone parse_zone(std::string_view text) {
  if (text == "safe") return Zone::Safe;
  if (text == "boundary") return Zone::Boundary;
  if (text == "danger") return Zone::Danger;
  throw SchemaError("unknown zone '" + std::string(text) + "'");
}

Zone zone_for_sr(double sr, double safe_cutoff, double danger_cutoff) {
  if (sr >= safe_cutoff) return Zone::Safe;
  if (sr >= danger_cutoff) return Zone::Boundary;
  return Zone::Danger;
}

DatasetCounts Dataset::counts() const {
  DatasetCounts c;
  c.n = records.size();
  for (const auto& r : records) c.n_success += r.outcome.success ? 1 : 0;
  c.n_fail = c.n - c.n_success;
  return c;
}

double Dataset::success_rate() const {
  const auto c = counts();
  if (c.n == 0) throw DomainError("success rate of an empty dataset");
  return static_cast<double>(c.n_success) / static_cast<double>(c.n);
}

std::string robot_for_space(std::string_view space) {
  if (space.rfind("franka", 0) == 0) return "franka";
  if (space.rfind("ur5e", 0) == 0) return "ur5e";
  return std::string(space);
}

std::vector<std::string> record_violations(const ParamSpace& space, const ExperimentRecord& r) {
  auto v = validate_config(space, r.config);
  for (auto& s : outcome_violations(r.outcome)) v.push_back(std::move(s));
  return v;
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  for (std::size_t i = 0; i < ds.records.size(); ++i)
    if (auto v = record_violations(ds.space, ds.records[i]); !v.empty())
      throw SchemaError(v.front() + " at record " + std::to_string(i), static_cast<std::ptrdiff_t>(i));
  const auto c = ds.counts();
  ojson header = ojson::object();
  header["format"] = "failure-dictionary";
  header["schema_version"] = kDictionarySchemaVersion;
  header["space"] = ds.space.name();
  header["robot"] = ds.robot;
  header["stage"] = ds.stage;
  header["seed"] = ds.seed;
  header["n"] = c.n;
  header["n_success"] = c.n_success;
  header["n_fail"] = c.n_fail;
  header["space_def"] = format_space(ds.space);
  header["manifest"] = ds.manifest;
  out << header.dump() << '\n';
  for (const auto& r : ds.records) out << record_to_json(ds.space, r).dump() << '\n';
  if (!out) throw Error("write failed");
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    try {
      write_dataset(out, ds);
      out.close();
      if (!out) throw Error("write to " + tmp.string() + " failed");
    } catch (...) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw;
    }
  }
  std::filesystem::rename(tmp, path);
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty file: missing header");
  ojson header;
  try {
    header = ojson::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("header is not valid JSON: ") + e.what());
  }
  if (!header.is_object() || header.value("format", "") != "failure-dictionary")
    throw SchemaError("not a failure-dictionary file");
  if (header.value("schema_version", 0) != kDictionarySchemaVersion)
    throw SchemaError("unsupported schema_version");
  const std::string name = get_string(header, "space", -1);
  ParamSpace space = header.contains("space_def") ? parse_space(get_string(header, "space_def", -1))
                                                  : builtin_space(name);
  if (space.name() != name) throw SchemaError("space_def names '" + space.name() + "', header says '" + name + "'");
  Dataset ds(std::move(space));
  ds.robot = get_string(header, "robot", -1);
  ds.stage = get_string(header, "stage", -1);
  ds.seed = get_unsigned(header, "seed", -1);
  if (header.contains("manifest")) ds.manifest = header["manifest"];

  std::ptrdiff_t idx = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::exception&) {
      fail("malformed JSON", idx, {});
    }
    ds.records.push_back(record_from_json(ds.space, j, idx));
    ++idx;
  }
  if (header.contains("n")) {
    const auto c = ds.counts();
    if (get_unsigned(header, "n", -1) != c.n || get_unsigned(header, "n_success", -1) != c.n_success ||
        get_unsigned(header, "n_fail", -1) != c.n_fail)
      throw SchemaError("header counts disagree with records");
  }
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_dataset(in);
}

void write_csv(std::ostream& out, const Dataset& ds) {
  for (const auto& d : ds.space.dims()) out << d.name() << ',';
  out << "success,failure_type,cycle_time,collision,drop,grasp_miss,fail_prob,zone,sample_idx,robot,stage,seed\n";
  for (const auto& r : ds.records) {
    for (const auto& d : ds.space.dims()) {
      const ParamValue& v = r.config.values.at(d.name());
      if (const auto* x = std::get_if<double>(&v)) out << format_number(*x);
      else if (const auto* i = std::get_if<std::int64_t>(&v)) out << *i;
      else out << std::get<std::string>(v);
      out << ',';
    }
    const auto& o = r.outcome;
    out << (o.success ? 1 : 0) << ',' << to_string(o.failure_type) << ',' << format_number(o.cycle_time) << ','
        << (o.collision ? 1 : 0) << ',' << (o.drop ? 1 : 0) << ',' << (o.grasp_miss ? 1 : 0) << ','
        << format_number(o.fail_prob) << ',' << to_string(r.zone) << ',' << r.config.sample_idx << ',' << r.robot
        << ',' << to_string(r.stage) << ',' << r.seed << '\n';
  }
}

Dataset merge_datasets(const Dataset& a, const Dataset& b) {
  if (a.space.name() != b.space.name() || !(a.space == b.space))
    throw SpaceMismatch("cannot merge '" + a.space.name() + "' with '" + b.space.name() + "'");
  if (b.records.empty()) return a;
  if (a.records.empty()) return b;
  Dataset out(a.space);
  out.records.reserve(a.records.size() + b.records.size());
  out.records.insert(out.records.end(), a.records.begin(), a.records.end());
  out.records.insert(out.records.end(), b.records.begin(), b.records.end());
  out.robot = a.robot == b.robot ? a.robot : "mixed";
  out.stage = a.stage == b.stage ? a.stage : "combined";
  out.seed = a.seed;
  return out;
}

CellSpec default_cell_spec(const ParamSpace& space) {
  CellSpec spec;
  if (space.find("friction") && space.find("mass")) {
    spec.axes = {{"friction", 10}, {"mass", 10}};
    return spec;
  }
  for (const auto* d : space.continuous_dims()) {
    if (spec.axes.size() == 2) break;
    spec.axes.emplace_back(d->name(), 10);
  }
  return spec;
}

namespace {

std::vector<std::size_t> cell_of_records(const Dataset& ds, const CellSpec& cells, std::size_t& n_cells) {
  if (cells.axes.empty() || cells.axes.size() > 2) throw DomainError("cell spec needs one or two axes");
  std::vector<const ParamDef*> defs;
  n_cells = 1;
  for (const auto& [dim, bins] : cells.axes) {
    const ParamDef* d = ds.space.find(dim);
    if (d == nullptr) throw DomainError("unknown dimension '" + dim + "'");
    if (d->kind() == ParamKind::Categorical) throw DomainError("cannot bin categorical '" + dim + "'");
    if (bins == 0) throw DomainError("bins must be >= 1");
    defs.push_back(d);
    n_cells *= bins;
  }
  std::vector<std::size_t> out;
  out.reserve(ds.records.size());
  for (const auto& r : ds.records) {
    std::size_t cell = 0;
    for (std::size_t a = 0; a < defs.size(); ++a) {
      const std::size_t k = cells.axes[a].second;
      cell = cell * k + bin_index(defs[a]->lo(), defs[a]->hi(), k, r.config.number(defs[a]->name()));
    }
    out.push_back(cell);
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> cell_counts(const Dataset& ds, const CellSpec& cells) {
  std::size_t n_cells = 0;
  const auto idx = cell_of_records(ds, cells, n_cells);
  std::vector<std::pair<std::size_t, std::size_t>> counts(n_cells);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    ++counts[idx[i]].first;
    counts[idx[i]].second += ds.records[i].outcome.success ? 1 : 0;
  }
  return counts;
}

Dataset label_zones(const Dataset& ds, const CellSpec& cells) {
  std::size_t n_cells = 0;
  const auto idx = cell_of_records(ds, cells, n_cells);
  std::vector<std::pair<std::size_t, std::size_t>> counts(n_cells);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    ++counts[idx[i]].first;
    counts[idx[i]].second += ds.records[i].outcome.success ? 1 : 0;
  }
  Dataset out = ds;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto [n, s] = counts[idx[i]];
    auto& r = out.records[i];
    if (n >= cells.min_count) r.zone = zone_for_sr(static_cast<double>(s) / static_cast<double>(n));
    else r.zone = zone_for_sr(1.0 - r.outcome.fail_prob);
  }
  return out;
}

}  // namespace deploygate
