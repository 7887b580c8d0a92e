#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "deploygate/error.hpp"
#include "deploygate/oracle.hpp"
#include "deploygate/oracle_constants.hpp"
#include "deploygate/sampler.hpp"
#include "support.hpp"

using namespace deploygate;
namespace oc = deploygate::oracle_constants;

namespace {

ScenarioConfig at_means(double mu, double m, std::uint64_t idx = 0) {
  ScenarioConfig c;
  c.space = "franka-8d";
  c.values = {{"friction", mu},  {"mass", m},         {"com_offset", 0.2},
              {"size", ref::kSize.mean}, {"ik_noise", ref::kIkN.mean}, {"obstacles", std::int64_t{2}},
              {"shape", "box"},  {"placement", "center_0"}};
  c.sample_idx = idx;
  return c;
}

// Obstacles are integers, so "at the mean" is done through the feature map.
std::map<std::string, double> feature_map(double mu, double m) {
  return {{"friction", mu},
          {"mass", m},
          {"size", ref::kSize.mean},
          {"ik_noise", ref::kIkN.mean},
          {"obstacles", ref::kObs.mean}};
}

}  // namespace

TEST(OracleConstants, MatchPublishedCoefficients) {
  EXPECT_EQ(oc::kIntercept, ref::kB0);
  EXPECT_EQ(oc::kFriction, ref::kMu);
  EXPECT_EQ(oc::kMass, ref::kM);
  EXPECT_EQ(oc::kFrictionMass, ref::kMuM);
  EXPECT_EQ(oc::kIkNoise, ref::kIk);
  EXPECT_EQ(oc::kFrictionSize, ref::kMuSize);
  EXPECT_EQ(oc::kMassObstacles, ref::kMObs);
}

TEST(OracleConstants, MomentsAreTheClosedForms) {
  EXPECT_NEAR(oc::kFrictionMean, ref::kFric.mean, 1e-15);
  EXPECT_NEAR(oc::kFrictionSd, ref::kFric.sd, 1e-15);
  EXPECT_NEAR(oc::kMassMean, ref::kMass.mean, 1e-15);
  EXPECT_NEAR(oc::kMassSd, ref::kMass.sd, 1e-15);
  EXPECT_NEAR(oc::kSizeMean, ref::kSize.mean, 1e-15);
  EXPECT_NEAR(oc::kSizeSd, ref::kSize.sd, 1e-15);
  EXPECT_NEAR(oc::kIkNoiseMean, ref::kIkN.mean, 1e-15);
  EXPECT_NEAR(oc::kIkNoiseSd, ref::kIkN.sd, 1e-15);
  EXPECT_NEAR(oc::kObstaclesMean, ref::kObs.mean, 1e-15);
  EXPECT_NEAR(oc::kObstaclesSd, ref::kObs.sd, 1e-14);
}

TEST(Oracle, MixTableValidates) {
  const OracleParams p = franka_oracle();
  ASSERT_EQ(p.mode_mix.size(), 7u);
  for (const auto& row : p.mode_mix) {
    double s = 0.0;
    for (double x : row) s += x;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  OracleParams bad = p;
  bad.mode_mix[0][0] += 0.1;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = p;
  bad.standardization["size"].sd = 0.0;
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(Oracle, DominantModeKeepsItsMargin) {
  const auto row = build_mode_row(FailureType::Collision, 0.428, oc::kGlobalModeShare, 0.02);
  EXPECT_EQ(row[1], 0.428);
  for (std::size_t i : {0u, 2u, 3u}) EXPECT_LE(row[i], 0.408 + 1e-15);
  EXPECT_THROW(build_mode_row(FailureType::Timeout, 0.2, oc::kGlobalModeShare, 0.02), DomainError);
}

TEST(Oracle, SuccessProbabilityExamples) {
  const OracleParams p = franka_oracle();
  // Friction on the boundary curve at 0.5 kg.
  const double mu_star = (1.469 + 0.419 * 0.5) / (3.691 - 1.400 * 0.5);
  EXPECT_NEAR(mu_star, 0.5612, 1e-4);
  EXPECT_NEAR(ref::sigmoid(success_logit(p, feature_map(mu_star, 0.5))), 0.5, 1e-12);
  EXPECT_NEAR(success_logit(p, feature_map(1.2, 0.05)), 2.8553, 1e-4);
  EXPECT_NEAR(ref::sigmoid(success_logit(p, feature_map(1.2, 0.05))), 0.9455, 1e-4);
  EXPECT_NEAR(success_logit(p, feature_map(0.05, 2.0)), -2.2625, 1e-4);
  EXPECT_NEAR(ref::sigmoid(success_logit(p, feature_map(0.05, 2.0))), 0.0943, 1e-4);
  EXPECT_THROW(success_logit(p, {{"friction", 0.1}}), DomainError);
}

TEST(Oracle, AgreesWithReferenceLogit) {
  const OracleParams p = franka_oracle();
  const SampleBatch b = sample_stage1(franka_space(), 2000, 11);
  for (const auto& c : b.configs) EXPECT_NEAR(success_probability(p, c), ref::franka_p(c), 1e-12);
}

TEST(Oracle, ProbabilityIsClamped) {
  OracleParams p = franka_oracle();
  p.b0 = 100.0;
  EXPECT_EQ(success_probability(p, at_means(0.5, 0.5)), 1.0 - 1e-9);
  p.b0 = -100.0;
  EXPECT_EQ(success_probability(p, at_means(0.5, 0.5)), 1e-9);
}

TEST(Oracle, NearCertainOutcomes) {
  OracleParams p = franka_oracle();
  p.b0 = 100.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto o = run_episode(p, at_means(0.5, 0.5, i), 1);
    EXPECT_TRUE(o.success);
    EXPECT_EQ(o.failure_type, FailureType::None);
    EXPECT_GE(o.cycle_time, oc::kSuccessCycleMin);
    EXPECT_LT(o.cycle_time, oc::kSuccessCycleMax);
  }
  p.b0 = -100.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto o = run_episode(p, at_means(0.5, 0.5, i), 1);
    EXPECT_FALSE(o.success);
    EXPECT_NE(o.failure_type, FailureType::None);
    EXPECT_TRUE(outcome_violations(o).empty());
  }
}

TEST(Oracle, EpisodeDeterministicAndConsistent) {
  const OracleParams p = franka_oracle();
  const SampleBatch b = sample_stage1(franka_space(), 3000, 5);
  for (const auto& c : b.configs) {
    const auto o = run_episode(p, c, 77);
    EXPECT_EQ(o, run_episode(p, c, 77));
    ASSERT_TRUE(outcome_violations(o).empty());
    EXPECT_EQ(o.fail_prob, 1.0 - success_probability(p, c));
    if (o.failure_type == FailureType::Timeout) EXPECT_EQ(o.cycle_time, 15.0);
  }
}

TEST(Oracle, OutcomeViolationsDetected) {
  EpisodeOutcome o;
  o.success = false;
  o.failure_type = FailureType::Timeout;
  o.cycle_time = 12.0;
  o.fail_prob = 0.5;
  EXPECT_EQ(outcome_violations(o).size(), 1u);
  o.cycle_time = 15.0;
  EXPECT_TRUE(outcome_violations(o).empty());
  o.drop = true;
  EXPECT_FALSE(outcome_violations(o).empty());
  EpisodeOutcome s;
  s.success = true;
  s.cycle_time = 2.0;
  s.collision = true;
  EXPECT_FALSE(outcome_violations(s).empty());
}

TEST(Oracle, ModeFrequenciesMatchMixTable) {
  const OracleParams p = franka_oracle();
  const std::vector<double> probe = {0.07, 0.13, 0.2, 0.35, 0.5, 0.7, 1.0};
  for (std::size_t bin = 0; bin < probe.size(); ++bin) {
    std::array<int, 4> count{};
    const auto c = at_means(probe[bin], 0.5);
    constexpr int kDraws = 50000;
    for (int k = 0; k < kDraws; ++k) {
      Stream s(3, "mode-test", static_cast<std::uint64_t>(bin * kDraws + k));
      const FailureType f = assign_failure_mode(p, c, s);
      for (std::size_t i = 0; i < 4; ++i)
        if (kFailureModes[i] == f) ++count[i];
    }
    for (std::size_t i = 0; i < 4; ++i)
      EXPECT_NEAR(count[i] / double(kDraws), p.mode_mix[bin][i], 0.02) << "bin " << bin << " mode " << i;
  }
}

TEST(Oracle, ModalFailuresPerFrictionBand) {
  const OracleParams p = franka_oracle();
  struct Case {
    double mu;
    FailureType mode;
    double share;
  };
  for (const Case& k : {Case{0.07, FailureType::Timeout, 0.391}, Case{1.0, FailureType::Collision, 0.428},
                        Case{0.5, FailureType::GripLoss, 0.331}}) {
    std::map<FailureType, int> count;
    constexpr int kDraws = 50000;
    for (int i = 0; i < kDraws; ++i) {
      Stream s(8, "modal", static_cast<std::uint64_t>(i));
      ++count[assign_failure_mode(p, at_means(k.mu, 0.5), s)];
    }
    FailureType modal = FailureType::None;
    int best = -1;
    for (const auto& [f, n] : count)
      if (n > best) {
        best = n;
        modal = f;
      }
    EXPECT_EQ(modal, k.mode) << k.mu;
    EXPECT_NEAR(best / double(kDraws), k.share, 0.01) << k.mu;
  }
}

TEST(Oracle, EmpiricalRateConvergesToMeanProbability) {
  const OracleParams p = franka_oracle();
  const SampleBatch b = sample_stage1(franka_space(), 10000, 2026);
  double mean_p = 0.0;
  int wins = 0;
  for (const auto& c : b.configs) {
    mean_p += success_probability(p, c);
    wins += run_episode(p, c, 2026).success ? 1 : 0;
  }
  mean_p /= 10000.0;
  EXPECT_LE(std::abs(wins / 10000.0 - mean_p), 4.0 * std::sqrt(0.25 / 10000.0));
}

TEST(Ur5e, InterceptReproducesCalibration) {
  EXPECT_NEAR(calibrate_ur5e_intercept(oc::kUr5eMassSlope, oc::kUr5eIkSlope, oc::kUr5eTargetSr), oc::kUr5eIntercept,
              1e-9);
  const double sr = ur5e_expected_sr(ur5e_oracle());
  EXPECT_NEAR(sr, 0.743, 1e-9);
  // Independent Monte Carlo of the same integral.
  EXPECT_NEAR(ref::ur5e_mc_sr(oc::kUr5eIntercept, oc::kUr5eMassSlope, oc::kUr5eIkSlope, 1000000, 4), sr, 2e-3);
  EXPECT_THROW(calibrate_ur5e_intercept(-1.5, -60.0, 1.0), DomainError);
}

TEST(Ur5e, FailuresAreGraspMisses) {
  const auto p = ur5e_oracle();
  const SampleBatch b = sample_stage1(ur5e_space(), 2000, 2026);
  int fails = 0;
  for (const auto& c : b.configs) {
    const auto o = ur5e_episode(p, c, 2026);
    EXPECT_EQ(o, ur5e_episode(p, c, 2026));
    ASSERT_TRUE(outcome_violations(o).empty());
    if (!o.success) {
      ++fails;
      EXPECT_EQ(o.failure_type, FailureType::GraspMiss);
      EXPECT_TRUE(o.grasp_miss);
    }
  }
  EXPECT_GT(fails, 0);
}

TEST(Ur5e, LightCleanPickIsReliable) {
  ScenarioConfig c;
  c.space = "ur5e-5d";
  c.values = {{"ik_noise", 0.0}, {"mass", 0.05}, {"grip_threshold", 0.01}, {"obstacles", std::int64_t{0}},
              {"placement", "center_0"}};
  const double p = ur5e_success_probability(ur5e_oracle(), c);
  EXPECT_GT(p, 0.9);
  EXPECT_NEAR(p, ref::sigmoid(oc::kUr5eIntercept - 1.5 * 0.05), 1e-15);
}

TEST(BuiltinOracle, Dispatch) {
  const BuiltinOracle f("franka-8d", 2026);
  const auto c = at_means(0.3, 0.4, 12);
  EXPECT_EQ(f.evaluate(c), run_episode(franka_oracle(), c, 2026));
  EXPECT_EQ(f.fail_prob(c), 1.0 - success_probability(franka_oracle(), c));
  EXPECT_THROW(BuiltinOracle("abb", 1), DomainError);
}

TEST(FailureType, TextRoundTrip) {
  for (FailureType t : {FailureType::None, FailureType::Timeout, FailureType::Collision, FailureType::GripLoss,
                        FailureType::GraspMiss})
    EXPECT_EQ(parse_failure_type(to_string(t)), t);
  EXPECT_THROW(parse_failure_type("explosion"), SchemaError);
}
