#include "deploygate/region.hpp"

#include <sstream>

#include "deploygate/error.hpp"

namespace deploygate {

std::string_view to_string(RangeSource s) { return s == RangeSource::Detected ? "detected" : "fallback"; }

const BoundaryRegion::Entry& BoundaryRegion::at(const std::string& dim) const {
  auto it = dims.find(dim);
  if (it == dims.end()) throw DomainError("region has no range for '" + dim + "'");
  return it->second;
}

void check_region(const ParamSpace& space, const BoundaryRegion& region) {
  if (region.space != space.name()) throw SpaceMismatch("region is for '" + region.space + "'");
  for (const auto* d : space.continuous_dims())
    if (region.dims.count(d->name()) == 0) throw DomainError("region misses dimension '" + d->name() + "'");
  for (const auto& [name, e] : region.dims) {
    const ParamDef& d = space.at(name);
    if (!d.continuous()) throw DomainError("region range on non-continuous '" + name + "'");
    if (!(e.range.lo < e.range.hi) || e.range.lo < d.lo() || e.range.hi > d.hi())
      throw DomainError("region range for '" + name + "' is not a proper sub-range");
  }
}

std::string format_region(const BoundaryRegion& region) {
  std::ostringstream out;
  out << "region 1\nspace " << region.space << '\n';
  for (const auto& [name, e] : region.dims)
    out << "range " << name << ' ' << format_number(e.range.lo) << ' ' << format_number(e.range.hi) << ' '
        << to_string(e.source) << '\n';
  return out.str();
}

BoundaryRegion parse_region(std::string_view text) {
  BoundaryRegion region;
  std::istringstream in{std::string(text)};
  std::string line;
  bool saw_version = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    if (key == "region") {
      std::string v;
      ls >> v;
      if (v != "1") throw SchemaError("unsupported region version");
      saw_version = true;
    } else if (key == "space") {
      ls >> region.space;
    } else if (key == "range") {
      std::string name, lo, hi, src;
      if (!(ls >> name >> lo >> hi >> src)) throw SchemaError("malformed range line: " + line);
      BoundaryRegion::Entry e;
      e.range = {parse_number(lo), parse_number(hi)};
      if (src == "detected") e.source = RangeSource::Detected;
      else if (src == "fallback") e.source = RangeSource::Fallback;
      else throw SchemaError("unknown range provenance '" + src + "'");
      region.dims[name] = e;
    } else {
      throw SchemaError("unrecognised region line: " + line);
    }
  }
  if (!saw_version) throw SchemaError("missing 'region 1' header");
  return region;
}

bool Clause::holds(double v) const noexcept {
  switch (cmp) {
    case Comparator::Less: return v < threshold;
    case Comparator::LessEq: return v <= threshold;
    case Comparator::Greater: return v > threshold;
    case Comparator::GreaterEq: return v >= threshold;
  }
  return false;
}

bool EmphasisSpec::contains(const ScenarioConfig& cfg) const {
  for (const auto& c : clauses)
    if (!c.holds(cfg.number(c.dim))) return false;
  return true;
}

std::vector<Clause> parse_predicate(std::string_view text) {
  std::vector<Clause> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view part = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    const auto op = part.find_first_of("<>");
    if (op == std::string_view::npos || op == 0) throw SchemaError("bad clause '" + std::string(part) + "'");
    Clause c;
    c.dim = std::string(part.substr(0, op));
    std::size_t rest = op + 1;
    const bool eq = rest < part.size() && part[rest] == '=';
    if (eq) ++rest;
    if (part[op] == '<') c.cmp = eq ? Comparator::LessEq : Comparator::Less;
    else c.cmp = eq ? Comparator::GreaterEq : Comparator::Greater;
    c.threshold = parse_number(part.substr(rest));
    out.push_back(std::move(c));
  }
  return out;
}

std::string format_predicate(const std::vector<Clause>& clauses) {
  std::string out;
  for (const auto& c : clauses) {
    if (!out.empty()) out += ',';
    out += c.dim;
    switch (c.cmp) {
      case Comparator::Less: out += "<"; break;
      case Comparator::LessEq: out += "<="; break;
      case Comparator::Greater: out += ">"; break;
      case Comparator::GreaterEq: out += ">="; break;
    }
    out += format_number(c.threshold);
  }
  return out;
}

}  // namespace deploygate
