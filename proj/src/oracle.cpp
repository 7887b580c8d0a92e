#include "deploygate/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "deploygate/error.hpp"
#include "deploygate/oracle_constants.hpp"

namespace deploygate {

namespace oc = oracle_constants;

namespace {

constexpr double kProbFloor = 1e-9;

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

std::size_t mode_index(FailureType t) {
  for (std::size_t i = 0; i < kFailureModes.size(); ++i)
    if (kFailureModes[i] == t) return i;
  throw DomainError("not a failure mode");
}

void set_flags(EpisodeOutcome& o) {
  o.collision = o.failure_type == FailureType::Collision;
  o.drop = o.failure_type == FailureType::GripLoss;
  o.grasp_miss = o.failure_type == FailureType::GraspMiss;
}

// 8-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                            -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                            0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                              0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                              0.2223810344533745, 0.1012285362903763};

}  // namespace

std::string_view to_string(FailureType t) {
  switch (t) {
    case FailureType::None: return "none";
    case FailureType::Timeout: return "timeout";
    case FailureType::Collision: return "collision";
    case FailureType::GripLoss: return "grip_loss";
    case FailureType::GraspMiss: return "grasp_miss";
  }
  return "?";
}

FailureType parse_failure_type(std::string_view text) {
  if (text == "none") return FailureType::None;
  if (text == "timeout") return FailureType::Timeout;
  if (text == "collision") return FailureType::Collision;
  if (text == "grip_loss") return FailureType::GripLoss;
  if (text == "grasp_miss") return FailureType::GraspMiss;
  throw SchemaError("unknown failure_type '" + std::string(text) + "'");
}

std::vector<std::string> outcome_violations(const EpisodeOutcome& o, double timeout_seconds) {
  std::vector<std::string> v;
  if (o.success) {
    if (o.failure_type != FailureType::None) v.push_back("success with failure_type " + std::string(to_string(o.failure_type)));
    if (o.collision || o.drop || o.grasp_miss) v.push_back("success with a failure flag set");
  } else if (o.failure_type == FailureType::None) {
    v.push_back("failure with failure_type none");
  }
  if (o.collision != (o.failure_type == FailureType::Collision)) v.push_back("collision flag disagrees with failure_type");
  if (o.drop != (o.failure_type == FailureType::GripLoss)) v.push_back("drop flag disagrees with failure_type");
  if (o.grasp_miss != (o.failure_type == FailureType::GraspMiss)) v.push_back("grasp_miss flag disagrees with failure_type");
  if (o.failure_type == FailureType::Timeout && o.cycle_time != timeout_seconds)
    v.push_back("timeout with cycle_time " + format_number(o.cycle_time) + " != " + format_number(timeout_seconds));
  if (!(o.cycle_time >= 0.0) || !std::isfinite(o.cycle_time)) v.push_back("cycle_time must be finite and >= 0");
  if (!(o.fail_prob >= 0.0 && o.fail_prob <= 1.0)) v.push_back("fail_prob outside [0,1]");
  return v;
}

void OracleParams::validate() const {
  if (mode_bin_edges.size() != mode_mix.size() + 1) throw DomainError("mode mix needs one row per friction bin");
  for (std::size_t i = 1; i < mode_bin_edges.size(); ++i)
    if (!(mode_bin_edges[i - 1] < mode_bin_edges[i])) throw DomainError("mode bin edges must increase");
  for (const auto& row : mode_mix) {
    const double s = std::accumulate(row.begin(), row.end(), 0.0);
    if (std::abs(s - 1.0) > 1e-9) throw DomainError("mode mix row does not sum to 1");
    for (double x : row)
      if (x < 0.0) throw DomainError("negative mode probability");
  }
  for (const auto& [name, m] : standardization)
    if (!(m.sd > 0.0)) throw DomainError("standardization sd for '" + name + "' must be positive");
  for (const auto& t : extra)
    for (const auto& f : t.factors)
      if (standardization.count(f) == 0) throw DomainError("no standardization for '" + f + "'");
}

std::array<double, 4> build_mode_row(FailureType dominant, double share, const std::array<double, 4>& global,
                                     double margin) {
  const std::size_t dom = mode_index(dominant);
  const double cap = share - margin;
  std::array<double, 4> row{};
  row[dom] = share;
  std::array<bool, 4> capped{};
  capped[dom] = true;
  double remaining = 1.0 - share;
  // Water-filling: proportional split, pinning any mode that exceeds the cap.
  for (int round = 0; round < 4; ++round) {
    double weight = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
      if (!capped[i]) weight += global[i];
    if (weight <= 0.0) break;
    bool changed = false;
    for (std::size_t i = 0; i < 4; ++i) {
      if (capped[i]) continue;
      row[i] = remaining * global[i] / weight;
    }
    for (std::size_t i = 0; i < 4; ++i) {
      if (!capped[i] && row[i] > cap) {
        row[i] = cap;
        capped[i] = true;
        remaining -= cap;
        changed = true;
      }
    }
    if (!changed) break;
  }
  const double s = std::accumulate(row.begin(), row.end(), 0.0);
  if (std::abs(s - 1.0) > 1e-12) throw DomainError("dominant share too small to be dominant");
  return row;
}

OracleParams franka_oracle() {
  OracleParams p;
  p.b0 = oc::kIntercept;
  p.b1 = oc::kFriction;
  p.b2 = oc::kMass;
  p.b3 = oc::kFrictionMass;
  p.extra = {{{"ik_noise"}, oc::kIkNoise},
             {{"friction", "size"}, oc::kFrictionSize},
             {{"mass", "obstacles"}, oc::kMassObstacles}};
  p.standardization = {{"friction", {oc::kFrictionMean, oc::kFrictionSd}},
                       {"mass", {oc::kMassMean, oc::kMassSd}},
                       {"size", {oc::kSizeMean, oc::kSizeSd}},
                       {"ik_noise", {oc::kIkNoiseMean, oc::kIkNoiseSd}},
                       {"obstacles", {oc::kObstaclesMean, oc::kObstaclesSd}}};
  p.mode_bin_edges.assign(oc::kModeBinEdges.begin(), oc::kModeBinEdges.end());
  // Dominant mode and its share per friction bin, lowest friction first.
  const std::array<std::pair<FailureType, double>, 7> dominant = {{{FailureType::Timeout, 0.391},
                                                                   {FailureType::Timeout, 0.443},
                                                                   {FailureType::Timeout, 0.420},
                                                                   {FailureType::Timeout, 0.385},
                                                                   {FailureType::GripLoss, 0.331},
                                                                   {FailureType::Timeout, 0.312},
                                                                   {FailureType::Collision, 0.428}}};
  for (const auto& [mode, share] : dominant)
    p.mode_mix.push_back(build_mode_row(mode, share, oc::kGlobalModeShare, oc::kDominanceMargin));
  p.timeout_seconds = oc::kTimeoutSeconds;
  p.validate();
  return p;
}

double success_logit(const OracleParams& p, const std::map<std::string, double>& features) {
  auto get = [&](const std::string& name) {
    auto it = features.find(name);
    if (it == features.end()) throw DomainError("oracle feature '" + name + "' missing");
    return it->second;
  };
  const double mu = get("friction");
  const double m = get("mass");
  double logit = p.b0 + p.b1 * mu + p.b2 * m + p.b3 * mu * m;
  for (const auto& term : p.extra) {
    double prod = term.coef;
    for (const auto& f : term.factors) {
      const Moments& s = p.standardization.at(f);
      prod *= (get(f) - s.mean) / s.sd;
    }
    logit += prod;
  }
  return logit;
}

double success_probability(const OracleParams& p, const ScenarioConfig& cfg) {
  std::map<std::string, double> features;
  features["friction"] = cfg.number("friction");
  features["mass"] = cfg.number("mass");
  for (const auto& term : p.extra)
    for (const auto& f : term.factors) features[f] = cfg.number(f);
  return clamp_prob(sigmoid(success_logit(p, features)));
}

FailureType assign_failure_mode(const OracleParams& p, const ScenarioConfig& cfg, Stream& stream) {
  const double mu = cfg.number("friction");
  const auto& e = p.mode_bin_edges;
  if (!(mu >= e.front() && mu <= e.back()))
    throw DomainError("friction " + format_number(mu) + " outside the mode-mix range");
  std::size_t bin = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), mu) - e.begin());
  bin = std::clamp<std::size_t>(bin, 1, p.mode_mix.size()) - 1;
  const auto& row = p.mode_mix[bin];
  const double u = stream.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    acc += row[i];
    if (u < acc) return kFailureModes[i];
  }
  for (std::size_t i = row.size(); i-- > 0;)
    if (row[i] > 0.0) return kFailureModes[i];
  return kFailureModes.back();
}

EpisodeOutcome run_episode(const OracleParams& p, const ScenarioConfig& cfg, std::uint64_t seed) {
  Stream s(seed, "episode", cfg.sample_idx);
  const double ps = success_probability(p, cfg);
  EpisodeOutcome o;
  o.fail_prob = 1.0 - ps;
  o.success = s.uniform() < ps;
  if (o.success) {
    o.failure_type = FailureType::None;
    o.cycle_time = s.uniform(oc::kSuccessCycleMin, oc::kSuccessCycleMax);
  } else {
    o.failure_type = assign_failure_mode(p, cfg, s);
    o.cycle_time = o.failure_type == FailureType::Timeout ? p.timeout_seconds
                                                          : s.uniform(oc::kFailureCycleMin, oc::kFailureCycleMax);
  }
  set_flags(o);
  return o;
}

// ---------------------------------------------------------------------------

Ur5eOracleParams ur5e_oracle() { return {oc::kUr5eIntercept, oc::kUr5eMassSlope, oc::kUr5eIkSlope}; }

double ur5e_success_probability(const Ur5eOracleParams& p, const ScenarioConfig& cfg) {
  const double logit = p.intercept + p.mass_slope * cfg.number("mass") + p.ik_slope * cfg.number("ik_noise");
  return clamp_prob(sigmoid(logit));
}

EpisodeOutcome ur5e_episode(const Ur5eOracleParams& p, const ScenarioConfig& cfg, std::uint64_t seed) {
  Stream s(seed, "episode", cfg.sample_idx);
  const double ps = ur5e_success_probability(p, cfg);
  EpisodeOutcome o;
  o.fail_prob = 1.0 - ps;
  o.success = s.uniform() < ps;
  if (o.success) {
    o.failure_type = FailureType::None;
    o.cycle_time = s.uniform(oc::kSuccessCycleMin, oc::kSuccessCycleMax);
  } else {
    o.failure_type = FailureType::GraspMiss;
    o.cycle_time = s.uniform(oc::kFailureCycleMin, oc::kFailureCycleMax);
  }
  set_flags(o);
  return o;
}

double ur5e_expected_sr(const Ur5eOracleParams& p) {
  const ParamSpace space = ur5e_space();
  const ParamDef& mass = space.at("mass");
  const ParamDef& ik = space.at("ik_noise");
  constexpr int kPanels = 64;
  double total = 0.0;
  for (int a = 0; a < kPanels; ++a) {
    for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
      const double u = (a + 0.5 * (kGlNodes[i] + 1.0)) / kPanels;
      const double m = std::exp(std::log(mass.lo()) + u * (std::log(mass.hi()) - std::log(mass.lo())));
      for (int b = 0; b < kPanels; ++b) {
        for (std::size_t j = 0; j < kGlNodes.size(); ++j) {
          const double v = (b + 0.5 * (kGlNodes[j] + 1.0)) / kPanels;
          const double x = ik.lo() + v * (ik.hi() - ik.lo());
          total += kGlWeights[i] * kGlWeights[j] * sigmoid(p.intercept + p.mass_slope * m + p.ik_slope * x);
        }
      }
    }
  }
  // Each panel maps [-1,1] onto width 1/kPanels: Jacobian 1/(2 kPanels) per axis.
  return total / (4.0 * kPanels * kPanels);
}

double calibrate_ur5e_intercept(double mass_slope, double ik_slope, double target) {
  if (!(target > 0.0 && target < 1.0)) throw DomainError("target success rate must lie in (0,1)");
  double lo = -50.0;
  double hi = 50.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ur5e_expected_sr({mid, mass_slope, ik_slope}) < target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

BuiltinOracle::BuiltinOracle(std::string space, std::uint64_t seed)
    : space_(std::move(space)), seed_(seed), franka_(franka_oracle()), ur5e_(ur5e_oracle()) {
  if (space_ != "franka-8d" && space_ != "ur5e-5d")
    throw DomainError("no built-in oracle for space '" + space_ + "'");
}

EpisodeOutcome BuiltinOracle::run(const ScenarioConfig& cfg) { return evaluate(cfg); }

EpisodeOutcome BuiltinOracle::evaluate(const ScenarioConfig& cfg) const {
  if (space_ == "franka-8d") return run_episode(franka_, cfg, seed_);
  return ur5e_episode(ur5e_, cfg, seed_);
}

double BuiltinOracle::fail_prob(const ScenarioConfig& cfg) const {
  if (space_ == "franka-8d") return 1.0 - success_probability(franka_, cfg);
  return 1.0 - ur5e_success_probability(ur5e_, cfg);
}

}  // namespace deploygate
