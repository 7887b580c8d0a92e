#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "deploygate/param_space.hpp"
#include "deploygate/rng.hpp"

namespace deploygate {

enum class FailureType { None, Timeout, Collision, GripLoss, GraspMiss };

std::string_view to_string(FailureType t);
FailureType parse_failure_type(std::string_view text);

/// Failure modes in mix-table column order.
inline constexpr std::array<FailureType, 4> kFailureModes = {FailureType::Timeout, FailureType::Collision,
                                                             FailureType::GripLoss, FailureType::GraspMiss};

struct EpisodeOutcome {
  bool success = false;
  FailureType failure_type = FailureType::None;
  double cycle_time = 0.0;
  bool collision = false;
  bool drop = false;
  bool grasp_miss = false;
  double fail_prob = 0.0;

  bool operator==(const EpisodeOutcome&) const = default;
};

/// Contract violations of an outcome; empty when consistent. Flags must mirror
/// failure_type (drop <=> grip_loss) and a timeout lasts exactly timeout_seconds.
std::vector<std::string> outcome_violations(const EpisodeOutcome& o, double timeout_seconds = 15.0);

/// Product of standardized features with a coefficient.
struct OracleTerm {
  std::vector<std::string> factors;
  double coef = 0.0;
};

struct OracleParams {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;  // raw friction/mass logit
  std::vector<OracleTerm> extra;
  std::map<std::string, Moments> standardization;
  std::vector<double> mode_bin_edges;                 // friction bin edges
  std::vector<std::array<double, 4>> mode_mix;        // one row per bin, kFailureModes order
  double timeout_seconds = 15.0;

  /// Throws DomainError when rows do not sum to 1 or an sd is not positive.
  void validate() const;
};

/// Builds one mix-table row: `dominant` gets `share`, the rest is split in
/// proportion to `global`, with every other mode capped `margin` below share.
std::array<double, 4> build_mode_row(FailureType dominant, double share, const std::array<double, 4>& global,
                                     double margin);

OracleParams franka_oracle();

/// Logit on a feature map (friction, mass and every extra-term factor).
double success_logit(const OracleParams& p, const std::map<std::string, double>& features);
/// Clamped to [1e-9, 1 - 1e-9].
double success_probability(const OracleParams& p, const ScenarioConfig& cfg);

FailureType assign_failure_mode(const OracleParams& p, const ScenarioConfig& cfg, Stream& stream);

/// Outcome of one episode; deterministic in (seed, cfg.sample_idx).
EpisodeOutcome run_episode(const OracleParams& p, const ScenarioConfig& cfg, std::uint64_t seed);

struct Ur5eOracleParams {
  double intercept = 0.0;
  double mass_slope = 0.0;
  double ik_slope = 0.0;
};

Ur5eOracleParams ur5e_oracle();
double ur5e_success_probability(const Ur5eOracleParams& p, const ScenarioConfig& cfg);
/// Every failure is a grasp miss.
EpisodeOutcome ur5e_episode(const Ur5eOracleParams& p, const ScenarioConfig& cfg, std::uint64_t seed);

/// Expected success rate under uniform LHS over the UR5e space (Gauss-Legendre
/// quadrature in the unit coordinates of mass and IK noise).
double ur5e_expected_sr(const Ur5eOracleParams& p);
/// Intercept giving ur5e_expected_sr == target for fixed slopes (bisection).
double calibrate_ur5e_intercept(double mass_slope, double ik_slope, double target);

/// Source of episode outcomes for a pipeline run.
class EpisodeRunner {
 public:
  virtual ~EpisodeRunner() = default;
  virtual EpisodeOutcome run(const ScenarioConfig& cfg) = 0;
};

/// Built-in oracle for "franka-8d" or "ur5e-5d"; pure, so one instance may be
/// shared between threads.
class BuiltinOracle final : public EpisodeRunner {
 public:
  BuiltinOracle(std::string space, std::uint64_t seed);
  EpisodeOutcome run(const ScenarioConfig& cfg) override;
  EpisodeOutcome evaluate(const ScenarioConfig& cfg) const;
  /// Analytic failure probability of a configuration.
  double fail_prob(const ScenarioConfig& cfg) const;
  const std::string& space() const noexcept { return space_; }

 private:
  std::string space_;
  std::uint64_t seed_;
  OracleParams franka_;
  Ur5eOracleParams ur5e_;
};

}  // namespace deploygate
