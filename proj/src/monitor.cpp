#include "deploygate/monitor.hpp"

#include <istream>
#include <ostream>

#include <json.hpp>

#include "deploygate/error.hpp"

namespace deploygate {

namespace {
// Tolerance on decline comparisons, so 0.95 - 0.90 counts as a 5-point drop.
constexpr double kEps = 1e-12;
}  // namespace

std::string_view to_string(AlertLevel a) {
  switch (a) {
    case AlertLevel::None: return "none";
    case AlertLevel::Warning: return "warning";
    case AlertLevel::Critical: return "critical";
  }
  return "?";
}

DriftMonitor::DriftMonitor(MonitorConfig cfg) : cfg_(cfg) {
  if (cfg_.window_size == 0) throw DomainError("window size must be positive");
  if (!(cfg_.warn_drop > 0.0 && cfg_.warn_drop <= cfg_.critical_drop))
    throw DomainError("need 0 < warn_drop <= critical_drop");
}

void DriftMonitor::register_recipe(const std::string& recipe, double baseline_sr) {
  if (!(baseline_sr >= 0.0 && baseline_sr <= 1.0)) throw DomainError("baseline SR out of [0,1]");
  std::unique_lock lock(map_mutex_);
  auto& slot = recipes_[recipe];
  if (!slot) {
    slot = std::make_unique<Recipe>();
    slot->ring.assign(cfg_.window_size, 0);
  }
  std::lock_guard rl(slot->mutex);
  slot->baseline = baseline_sr;
}

bool DriftMonitor::has_recipe(const std::string& recipe) const {
  std::shared_lock lock(map_mutex_);
  return recipes_.count(recipe) != 0;
}

std::vector<std::string> DriftMonitor::recipes() const {
  std::shared_lock lock(map_mutex_);
  std::vector<std::string> out;
  for (const auto& [k, v] : recipes_) out.push_back(k);
  return out;
}

DriftMonitor::Recipe& DriftMonitor::find(const std::string& recipe) const {
  std::shared_lock lock(map_mutex_);
  auto it = recipes_.find(recipe);
  if (it == recipes_.end()) throw DomainError("unknown recipe '" + recipe + "'");
  return *it->second;
}

std::optional<double> DriftMonitor::decline_locked(const Recipe& r) const {
  if (r.filled < cfg_.window_size) return std::nullopt;
  const double sr = static_cast<double>(r.successes) / static_cast<double>(cfg_.window_size);
  double d = r.baseline - sr;
  if (cfg_.relative) d = r.baseline > 0.0 ? d / r.baseline : 0.0;
  return d;
}

AlertLevel DriftMonitor::ingest(const std::string& recipe, bool success) {
  Recipe& r = find(recipe);
  std::lock_guard lock(r.mutex);
  if (r.filled == cfg_.window_size) r.successes -= static_cast<std::size_t>(r.ring[r.head]);
  else ++r.filled;
  r.ring[r.head] = success ? 1 : 0;
  r.successes += success ? 1 : 0;
  r.head = (r.head + 1) % cfg_.window_size;

  AlertLevel level = AlertLevel::None;
  if (auto d = decline_locked(r)) {
    if (*d >= cfg_.critical_drop - kEps) level = AlertLevel::Critical;
    else if (*d >= cfg_.warn_drop - kEps) level = AlertLevel::Warning;
  }
  const AlertLevel previous = r.last;
  r.last = level;
  if (cfg_.debounce && level == previous) return AlertLevel::None;
  return level;
}

std::optional<double> DriftMonitor::window_sr(const std::string& recipe) const {
  const Recipe& r = find(recipe);
  std::lock_guard lock(r.mutex);
  if (r.filled < cfg_.window_size) return std::nullopt;
  return static_cast<double>(r.successes) / static_cast<double>(cfg_.window_size);
}

double DriftMonitor::baseline_sr(const std::string& recipe) const {
  const Recipe& r = find(recipe);
  std::lock_guard lock(r.mutex);
  return r.baseline;
}

std::optional<double> DriftMonitor::decline(const std::string& recipe) const {
  const Recipe& r = find(recipe);
  std::lock_guard lock(r.mutex);
  return decline_locked(r);
}

std::vector<AlertEvent> replay_events(DriftMonitor& monitor, std::istream& events, std::ostream* alerts) {
  std::vector<AlertEvent> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(events, line); ++lineno) {
    if (line.empty() || line[0] == '#') continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw SchemaError("malformed event at line " + std::to_string(lineno));
    }
    if (!j.is_object() || !j.contains("recipe") || !j["recipe"].is_string())
      throw SchemaError("event without recipe at line " + std::to_string(lineno));
    const std::string recipe = j["recipe"].get<std::string>();
    if (j.contains("baseline_sr")) {
      if (!j["baseline_sr"].is_number()) throw SchemaError("baseline_sr is not a number at line " + std::to_string(lineno));
      monitor.register_recipe(recipe, j["baseline_sr"].get<double>());
      continue;
    }
    if (!j.contains("success") || !j["success"].is_boolean())
      throw SchemaError("event without boolean success at line " + std::to_string(lineno));
    const AlertLevel level = monitor.ingest(recipe, j["success"].get<bool>());
    if (level == AlertLevel::None) continue;
    AlertEvent e;
    e.line = lineno;
    e.recipe = recipe;
    if (j.contains("timestamp")) e.timestamp = j["timestamp"].is_string() ? j["timestamp"].get<std::string>() : j["timestamp"].dump();
    e.level = level;
    e.window_sr = *monitor.window_sr(recipe);
    e.baseline_sr = monitor.baseline_sr(recipe);
    e.decline = *monitor.decline(recipe);
    if (alerts) {
      nlohmann::ordered_json a;
      a["level"] = std::string(to_string(level));
      a["recipe"] = e.recipe;
      a["timestamp"] = e.timestamp;
      a["line"] = e.line;
      a["window_sr"] = e.window_sr;
      a["baseline_sr"] = e.baseline_sr;
      a["decline"] = e.decline;
      *alerts << a.dump() << '\n';
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace deploygate
