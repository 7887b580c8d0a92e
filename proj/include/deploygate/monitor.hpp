#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace deploygate {

enum class AlertLevel { None, Warning, Critical };
std::string_view to_string(AlertLevel a);

struct MonitorConfig {
  std::size_t window_size = 100;
  double warn_drop = 0.05;
  double critical_drop = 0.10;
  bool relative = false;  // decline as a fraction of baseline instead of absolute points
  bool debounce = false;  // report a level only when it differs from the previous ingest's
};

/// Per-recipe moving-window success-rate monitor. Different recipes may be
/// ingested from different threads; one recipe takes one writer at a time.
class DriftMonitor {
 public:
  explicit DriftMonitor(MonitorConfig cfg = {});

  void register_recipe(const std::string& recipe, double baseline_sr);
  bool has_recipe(const std::string& recipe) const;
  std::vector<std::string> recipes() const;

  AlertLevel ingest(const std::string& recipe, bool success);
  /// Empty until the window has filled once.
  std::optional<double> window_sr(const std::string& recipe) const;
  double baseline_sr(const std::string& recipe) const;
  /// Decline that the alert levels compare against; empty before the window fills.
  std::optional<double> decline(const std::string& recipe) const;

  const MonitorConfig& config() const noexcept { return cfg_; }

 private:
  struct Recipe {
    mutable std::mutex mutex;
    double baseline = 0.0;
    std::vector<char> ring;
    std::size_t head = 0;
    std::size_t filled = 0;
    std::size_t successes = 0;
    AlertLevel last = AlertLevel::None;
  };

  Recipe& find(const std::string& recipe) const;
  std::optional<double> decline_locked(const Recipe& r) const;

  MonitorConfig cfg_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::unique_ptr<Recipe>> recipes_;
};

/// One alert-log line.
struct AlertEvent {
  std::size_t line = 0;
  std::string recipe;
  std::string timestamp;
  AlertLevel level = AlertLevel::None;
  double window_sr = 0.0;
  double baseline_sr = 0.0;
  double decline = 0.0;
};

/// Replays a JSON-lines event stream. Lines with "baseline_sr" register a
/// recipe; lines with "success" are ingested. Alerts are written to `alerts`
/// as JSON lines and returned.
std::vector<AlertEvent> replay_events(DriftMonitor& monitor, std::istream& events, std::ostream* alerts);

}  // namespace deploygate
