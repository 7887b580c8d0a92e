#pragma once

// Test-side reference implementations. Nothing here calls into the library's
// oracle or statistics code, so the suites can compare against it.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "deploygate/dictionary.hpp"
#include "deploygate/gate.hpp"
#include "deploygate/param_space.hpp"

namespace ref {

// Published success-logit coefficients.
inline constexpr double kB0 = -1.469;
inline constexpr double kMu = 3.691;
inline constexpr double kM = -0.419;
inline constexpr double kMuM = -1.400;
inline constexpr double kIk = -0.288;
inline constexpr double kMuSize = 0.190;
inline constexpr double kMObs = 0.079;

struct Mom {
  double mean;
  double sd;
};

inline Mom log_uniform(double a, double b) {
  const double l = std::log(b / a);
  const double mean = (b - a) / l;
  const double ex2 = (b * b - a * a) / (2.0 * l);
  return {mean, std::sqrt(ex2 - mean * mean)};
}
inline Mom uniform(double a, double b) { return {(a + b) / 2.0, (b - a) / std::sqrt(12.0)}; }
inline Mom integers(int a, int b) {
  double s = 0.0, s2 = 0.0;
  for (int k = a; k <= b; ++k) {
    s += k;
    s2 += double(k) * k;
  }
  const double n = b - a + 1;
  return {s / n, std::sqrt(s2 / n - (s / n) * (s / n))};
}

inline const Mom kFric = log_uniform(0.05, 1.2);
inline const Mom kMass = log_uniform(0.05, 2.0);
inline const Mom kSize = uniform(0.02, 0.12);
inline const Mom kIkN = uniform(0.0, 0.04);
inline const Mom kObs = integers(0, 5);

inline double z(double v, const Mom& m) { return (v - m.mean) / m.sd; }

inline double franka_logit(double mu, double m, double size, double ik, double obs) {
  return kB0 + kMu * mu + kM * m + kMuM * mu * m + kIk * z(ik, kIkN) + kMuSize * z(mu, kFric) * z(size, kSize) +
         kMObs * z(m, kMass) * z(obs, kObs);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double franka_p(const deploygate::ScenarioConfig& c) {
  return sigmoid(franka_logit(c.number("friction"), c.number("mass"), c.number("size"), c.number("ik_noise"),
                              c.number("obstacles")));
}

/// Mean success probability under uniform sampling of the Franka space.
inline double franka_mc_sr(std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> obs(0, 5);
  double total = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double mu = 0.05 * std::pow(1.2 / 0.05, u(g));
    const double m = 0.05 * std::pow(2.0 / 0.05, u(g));
    const double size = 0.02 + 0.10 * u(g);
    const double ik = 0.04 * u(g);
    total += sigmoid(franka_logit(mu, m, size, ik, obs(g)));
  }
  return total / static_cast<double>(draws);
}

/// Mean UR5e success probability for a logit a + b m + c ik over uniform
/// sampling (log-uniform mass on [0.05, 3], ik on [0, 0.02]).
inline double ur5e_mc_sr(double a, double b, double c, std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double total = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double m = 0.05 * std::pow(3.0 / 0.05, u(g));
    total += sigmoid(a + b * m + c * 0.02 * u(g));
  }
  return total / static_cast<double>(draws);
}

/// Exhaustive pair-count AUC with half credit for ties.
inline double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) num += 1.0;
      else if (s[i] == s[j]) num += 0.5;
    }
  }
  return num / pairs;
}

/// Single-dimension space "x" on [0, 1] used by synthetic datasets.
inline deploygate::ParamSpace line_space(double lo = 0.0, double hi = 1.0) {
  return deploygate::ParamSpace("line", {deploygate::ParamDef::linear("x", lo, hi)});
}

inline deploygate::ExperimentRecord make_record(const std::string& space, std::uint64_t idx,
                                                std::map<std::string, deploygate::ParamValue> values,
                                                bool success) {
  deploygate::ExperimentRecord r;
  r.config.space = space;
  r.config.values = std::move(values);
  r.config.sample_idx = idx;
  r.outcome.success = success;
  if (success) {
    r.outcome.cycle_time = 3.0;
  } else {
    r.outcome.failure_type = deploygate::FailureType::Collision;
    r.outcome.collision = true;
    r.outcome.cycle_time = 5.0;
  }
  r.outcome.fail_prob = success ? 0.2 : 0.8;
  r.zone = deploygate::Zone::Boundary;
  r.robot = "test";
  return r;
}

/// n points on x with success drawn from logit(b0 + b1 x).
inline deploygate::Dataset logistic_line(std::size_t n, double b0, double b1, std::uint64_t seed) {
  deploygate::Dataset ds(line_space());
  ds.robot = "test";
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(g);
    const bool ok = u(g) < sigmoid(b0 + b1 * x);
    ds.records.push_back(make_record("line", i, {{"x", x}}, ok));
  }
  return ds;
}

/// 1000 gate episodes against baseline (cycle 10 s, miss rate 0.01, SR 1)
/// where metric i of kGateMetrics fails iff bit i of `fail_mask` is set.
inline std::vector<deploygate::GateEpisode> gate_case(unsigned fail_mask) {
  using deploygate::FailureType;
  const bool sr_fail = fail_mask & 1u, cycle_fail = fail_mask & 2u, coll_fail = fail_mask & 4u,
             drop_fail = fail_mask & 8u, miss_fail = fail_mask & 16u;
  constexpr int n = 1000;
  const int collisions = coll_fail ? 1 : 0;
  const int drops = drop_fail ? 31 : 30;   // limit 0.03
  const int misses = miss_fail ? 13 : 12;  // limit 1.2 * 0.01
  const int fixed = collisions + drops + misses;
  const int timeouts = (sr_fail ? 81 : 80) - fixed;  // SR limit 0.92
  std::vector<FailureType> modes;
  modes.insert(modes.end(), collisions, FailureType::Collision);
  modes.insert(modes.end(), drops, FailureType::GripLoss);
  modes.insert(modes.end(), misses, FailureType::GraspMiss);
  modes.insert(modes.end(), timeouts, FailureType::Timeout);
  modes.resize(n, FailureType::None);
  // Every non-timeout episode shares one cycle time chosen to hit the mean.
  const double target = cycle_fail ? 11.5 : 10.5;
  const double other = (target * n - 15.0 * timeouts) / (n - timeouts);
  std::vector<deploygate::GateEpisode> eps;
  for (FailureType f : modes) {
    deploygate::GateEpisode e;
    e.outcome.success = f == FailureType::None;
    e.outcome.failure_type = f;
    e.outcome.collision = f == FailureType::Collision;
    e.outcome.drop = f == FailureType::GripLoss;
    e.outcome.grasp_miss = f == FailureType::GraspMiss;
    e.outcome.cycle_time = f == FailureType::Timeout ? 15.0 : other;
    eps.push_back(e);
  }
  return eps;
}

inline const deploygate::Baseline kGateBaseline{10.0, 0.01, 1.0};

/// Alert levels per event (0 none, 1 warning, 2 critical) of a moving-window
/// monitor, in integer arithmetic: `baseline_hits` is baseline SR times the
/// window, and decline thresholds are counts of episodes.
inline std::vector<int> window_alerts(const std::vector<bool>& outcomes, int window, int baseline_hits, int warn,
                                      int critical) {
  std::vector<int> out;
  int hits = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    hits += outcomes[i];
    if (i >= static_cast<std::size_t>(window)) hits -= outcomes[i - window];
    if (i + 1 < static_cast<std::size_t>(window)) {
      out.push_back(0);
      continue;
    }
    const int drop = baseline_hits - hits;
    out.push_back(drop >= critical ? 2 : drop >= warn ? 1 : 0);
  }
  return out;
}

/// 1000 outcomes against a 0.95 baseline: steady at 95%, a dip to 88%, a
/// deeper dip to 80%, then recovery.
inline std::vector<bool> engineered_stream() {
  std::vector<bool> out;
  auto block = [&](int n, int fail_every, int extra_every) {
    for (int i = 0; i < n; ++i) {
      const bool fail = (i % fail_every == fail_every - 1) || (extra_every > 0 && i % extra_every == 3);
      out.push_back(!fail);
    }
  };
  block(300, 20, 0);  // 95%
  block(200, 25, 14);  // about 88%
  block(150, 5, 0);   // 80%
  block(350, 20, 0);  // 95%
  return out;
}

}  // namespace ref
