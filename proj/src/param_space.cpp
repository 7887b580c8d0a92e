#include "deploygate/param_space.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "deploygate/error.hpp"

namespace deploygate {

namespace {

const std::vector<std::string> kPlacements = {"center_0", "center_45", "center_90", "center_135",
                                              "edge_0",   "edge_45",   "edge_90",   "edge_135"};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::ContinuousLinear: return "continuous-linear";
    case ParamKind::ContinuousLog: return "continuous-log";
    case ParamKind::Integer: return "integer";
    case ParamKind::Categorical: return "categorical";
  }
  return "?";
}

ParamKind parse_param_kind(std::string_view text) {
  if (text == "continuous-linear" || text == "linear") return ParamKind::ContinuousLinear;
  if (text == "continuous-log" || text == "log") return ParamKind::ContinuousLog;
  if (text == "integer") return ParamKind::Integer;
  if (text == "categorical") return ParamKind::Categorical;
  throw SchemaError("unknown parameter kind '" + std::string(text) + "'");
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text) {
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw SchemaError("not a number: '" + std::string(text) + "'");
  return v;
}

// ---------------------------------------------------------------------------

ParamDef ParamDef::linear(std::string name, double lo, double hi) {
  if (!(lo < hi)) throw DomainError(name + ": requires lo < hi");
  ParamDef d;
  d.name_ = std::move(name);
  d.kind_ = ParamKind::ContinuousLinear;
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

ParamDef ParamDef::log(std::string name, double lo, double hi) {
  if (!(lo < hi)) throw DomainError(name + ": requires lo < hi");
  if (!(lo > 0.0)) throw DomainError(name + ": log scale requires lo > 0");
  ParamDef d;
  d.name_ = std::move(name);
  d.kind_ = ParamKind::ContinuousLog;
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

ParamDef ParamDef::integer(std::string name, std::int64_t lo, std::int64_t hi) {
  if (!(lo < hi)) throw DomainError(name + ": requires lo < hi");
  ParamDef d;
  d.name_ = std::move(name);
  d.kind_ = ParamKind::Integer;
  d.lo_ = static_cast<double>(lo);
  d.hi_ = static_cast<double>(hi);
  return d;
}

ParamDef ParamDef::categorical(std::string name, std::vector<std::string> categories) {
  if (categories.empty()) throw DomainError(name + ": categories must be non-empty");
  std::set<std::string> seen(categories.begin(), categories.end());
  if (seen.size() != categories.size()) throw DomainError(name + ": duplicate category");
  ParamDef d;
  d.name_ = std::move(name);
  d.kind_ = ParamKind::Categorical;
  d.lo_ = 0.0;
  d.hi_ = static_cast<double>(categories.size() - 1);
  d.categories_ = std::move(categories);
  return d;
}

ParamDef ParamDef::narrowed(Range r) const {
  if (kind_ == ParamKind::Categorical) throw DomainError(name_ + ": cannot narrow a categorical");
  if (r.lo < lo_ || r.hi > hi_)
    throw DomainError(name_ + ": narrowed range leaves [" + format_number(lo_) + "," +
                      format_number(hi_) + "]");
  switch (kind_) {
    case ParamKind::ContinuousLinear: return linear(name_, r.lo, r.hi);
    case ParamKind::ContinuousLog: return log(name_, r.lo, r.hi);
    default: return integer(name_, static_cast<std::int64_t>(r.lo), static_cast<std::int64_t>(r.hi));
  }
}

// ---------------------------------------------------------------------------

ParamSpace::ParamSpace(std::string name, std::vector<ParamDef> dims,
                       std::map<std::string, Range> fallback_ranges)
    : name_(std::move(name)), dims_(std::move(dims)), fallback_(std::move(fallback_ranges)) {
  std::set<std::string> names;
  for (const auto& d : dims_)
    if (!names.insert(d.name()).second) throw DomainError("duplicate dimension '" + d.name() + "'");
  for (const auto& [dim, r] : fallback_) {
    const ParamDef* d = find(dim);
    if (d == nullptr) throw DomainError("fallback for unknown dimension '" + dim + "'");
    if (!(r.lo < r.hi) || r.lo < d->lo() || r.hi > d->hi())
      throw DomainError("fallback range for '" + dim + "' must lie inside its range");
  }
}

const ParamDef* ParamSpace::find(std::string_view dim) const noexcept {
  for (const auto& d : dims_)
    if (d.name() == dim) return &d;
  return nullptr;
}

const ParamDef& ParamSpace::at(std::string_view dim) const {
  const ParamDef* d = find(dim);
  if (d == nullptr) throw DomainError("space " + name_ + " has no dimension '" + std::string(dim) + "'");
  return *d;
}

std::optional<Range> ParamSpace::fallback(std::string_view dim) const {
  auto it = fallback_.find(std::string(dim));
  if (it == fallback_.end()) return std::nullopt;
  return it->second;
}

std::vector<const ParamDef*> ParamSpace::continuous_dims() const {
  std::vector<const ParamDef*> out;
  for (const auto& d : dims_)
    if (d.continuous()) out.push_back(&d);
  return out;
}

double ScenarioConfig::number(const std::string& dim) const {
  auto it = values.find(dim);
  if (it == values.end()) throw DomainError("config has no value for '" + dim + "'");
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  throw DomainError("'" + dim + "' is not numeric");
}

const std::string& ScenarioConfig::label(const std::string& dim) const {
  auto it = values.find(dim);
  if (it == values.end()) throw DomainError("config has no value for '" + dim + "'");
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  throw DomainError("'" + dim + "' is not a label");
}

// ---------------------------------------------------------------------------

ParamSpace franka_space() {
  return ParamSpace(
      "franka-8d",
      {ParamDef::log("friction", 0.05, 1.2), ParamDef::log("mass", 0.05, 2.0),
       ParamDef::linear("com_offset", 0.0, 0.4), ParamDef::linear("size", 0.02, 0.12),
       ParamDef::linear("ik_noise", 0.0, 0.04), ParamDef::integer("obstacles", 0, 5),
       ParamDef::categorical("shape", {"box", "cylinder", "sphere", "irregular"}),
       ParamDef::categorical("placement", kPlacements)},
      {{"friction", {0.05, 0.40}},
       {"mass", {0.3, 2.0}},
       {"com_offset", {0.1, 0.4}},
       // Domain-knowledge range extends below the sampled minimum of 0.02 m;
       // clipped to the dimension so it stays a valid sub-range.
       {"size", {0.02, 0.05}},
       {"ik_noise", {0.01, 0.04}}});
}

ParamSpace ur5e_space() {
  return ParamSpace("ur5e-5d", {ParamDef::linear("ik_noise", 0.0, 0.02), ParamDef::log("mass", 0.05, 3.0),
                                ParamDef::linear("grip_threshold", 0.005, 0.02),
                                ParamDef::integer("obstacles", 0, 3),
                                ParamDef::categorical("placement", kPlacements)});
}

ParamSpace builtin_space(std::string_view name) {
  if (name == "franka-8d" || name == "franka") return franka_space();
  if (name == "ur5e-5d" || name == "ur5e") return ur5e_space();
  throw DomainError("unknown parameter space '" + std::string(name) + "'");
}

ParamValue scale_to_value(const ParamDef& def, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("unit coordinate " + format_number(u) + " outside [0,1]");
  const double lo = def.lo();
  const double hi = def.hi();
  switch (def.kind()) {
    case ParamKind::ContinuousLinear: {
      if (u == 1.0) return hi;
      return std::clamp(lo + u * (hi - lo), lo, hi);
    }
    case ParamKind::ContinuousLog: {
      if (u == 0.0) return lo;
      if (u == 1.0) return hi;
      const double v = std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
      return std::clamp(v, lo, hi);
    }
    case ParamKind::Integer: {
      const auto ilo = static_cast<std::int64_t>(lo);
      const auto ihi = static_cast<std::int64_t>(hi);
      const auto width = static_cast<double>(ihi - ilo + 1);
      const auto k = static_cast<std::int64_t>(std::floor(u * width));
      return std::min(ilo + k, ihi);
    }
    case ParamKind::Categorical: {
      const auto n = def.categories().size();
      auto k = static_cast<std::size_t>(std::floor(u * static_cast<double>(n)));
      return def.categories()[std::min(k, n - 1)];
    }
  }
  throw DomainError("unreachable");
}

std::vector<std::string> validate_config(const ParamSpace& space, const ScenarioConfig& cfg) {
  std::vector<std::string> problems;
  if (!cfg.space.empty() && cfg.space != space.name())
    problems.push_back("config belongs to space '" + cfg.space + "', not '" + space.name() + "'");
  for (const auto& def : space.dims()) {
    auto it = cfg.values.find(def.name());
    if (it == cfg.values.end()) {
      problems.push_back(def.name() + " missing");
      continue;
    }
    const ParamValue& v = it->second;
    const std::string range = "[" + format_number(def.lo()) + "," + format_number(def.hi()) + "]";
    switch (def.kind()) {
      case ParamKind::ContinuousLinear:
      case ParamKind::ContinuousLog: {
        const double* x = std::get_if<double>(&v);
        if (x == nullptr) {
          problems.push_back(def.name() + " must be a real number");
        } else if (!(*x >= def.lo() && *x <= def.hi())) {
          problems.push_back(def.name() + " out of " + range);
        }
        break;
      }
      case ParamKind::Integer: {
        const std::int64_t* x = std::get_if<std::int64_t>(&v);
        if (x == nullptr) {
          problems.push_back(def.name() + " must be an integer");
        } else if (static_cast<double>(*x) < def.lo() || static_cast<double>(*x) > def.hi()) {
          problems.push_back(def.name() + " out of " + range);
        }
        break;
      }
      case ParamKind::Categorical: {
        const std::string* x = std::get_if<std::string>(&v);
        if (x == nullptr) {
          problems.push_back(def.name() + " must be a label");
        } else if (std::find(def.categories().begin(), def.categories().end(), *x) ==
                   def.categories().end()) {
          problems.push_back(def.name() + ": unknown category '" + *x + "'");
        }
        break;
      }
    }
  }
  for (const auto& [name, _] : cfg.values)
    if (space.find(name) == nullptr) problems.push_back(name + ": unknown dimension");
  return problems;
}

Moments uniform_moments(const ParamDef& def) {
  const double lo = def.lo();
  const double hi = def.hi();
  switch (def.kind()) {
    case ParamKind::ContinuousLinear:
      return {0.5 * (lo + hi), (hi - lo) / std::sqrt(12.0)};
    case ParamKind::ContinuousLog: {
      const double l = std::log(hi / lo);
      const double mean = (hi - lo) / l;
      const double second = (hi * hi - lo * lo) / (2.0 * l);
      return {mean, std::sqrt(second - mean * mean)};
    }
    case ParamKind::Integer: {
      const double k = hi - lo + 1.0;
      return {0.5 * (lo + hi), std::sqrt((k * k - 1.0) / 12.0)};
    }
    case ParamKind::Categorical: break;
  }
  throw DomainError(def.name() + ": categorical dimensions have no moments");
}

std::string format_space(const ParamSpace& space) {
  std::ostringstream out;
  out << "paramspace 1\n";
  out << "name " << space.name() << '\n';
  for (const auto& d : space.dims()) {
    out << "dim " << d.name() << ' ' << to_string(d.kind());
    if (d.kind() == ParamKind::Categorical) {
      for (const auto& c : d.categories()) out << ' ' << c;
    } else {
      out << ' ' << format_number(d.lo()) << ' ' << format_number(d.hi());
    }
    out << '\n';
  }
  for (const auto& d : space.dims())
    if (auto fb = space.fallback(d.name()))
      out << "fallback " << d.name() << ' ' << format_number(fb->lo) << ' ' << format_number(fb->hi) << '\n';
  return out.str();
}

ParamSpace parse_space(std::string_view text) {
  std::string name;
  std::vector<ParamDef> dims;
  std::map<std::string, Range> fallbacks;
  bool saw_version = false;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const auto where = " (line " + std::to_string(lineno) + ")";
    try {
      if (tok[0] == "paramspace") {
        if (tok.size() != 2 || tok[1] != "1") throw SchemaError("unsupported paramspace version");
        saw_version = true;
      } else if (tok[0] == "name" && tok.size() == 2) {
        name = std::string(tok[1]);
      } else if (tok[0] == "dim" && tok.size() >= 3) {
        const std::string dim(tok[1]);
        const ParamKind kind = parse_param_kind(tok[2]);
        if (kind == ParamKind::Categorical) {
          std::vector<std::string> cats(tok.begin() + 3, tok.end());
          dims.push_back(ParamDef::categorical(dim, std::move(cats)));
        } else {
          if (tok.size() != 5) throw SchemaError("dim needs lo and hi");
          const double lo = parse_number(tok[3]);
          const double hi = parse_number(tok[4]);
          if (kind == ParamKind::ContinuousLinear) dims.push_back(ParamDef::linear(dim, lo, hi));
          else if (kind == ParamKind::ContinuousLog) dims.push_back(ParamDef::log(dim, lo, hi));
          else dims.push_back(ParamDef::integer(dim, static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
        }
      } else if (tok[0] == "fallback" && tok.size() == 4) {
        fallbacks[std::string(tok[1])] = Range{parse_number(tok[2]), parse_number(tok[3])};
      } else {
        throw SchemaError("unrecognised line");
      }
    } catch (const SchemaError& e) {
      throw SchemaError(std::string(e.what()) + where);
    } catch (const DomainError& e) {
      throw SchemaError(std::string(e.what()) + where);
    }
  }
  if (!saw_version) throw SchemaError("missing 'paramspace 1' header");
  if (name.empty()) throw SchemaError("missing space name");
  try {
    return ParamSpace(std::move(name), std::move(dims), std::move(fallbacks));
  } catch (const DomainError& e) {
    throw SchemaError(e.what());
  }
}

}  // namespace deploygate
