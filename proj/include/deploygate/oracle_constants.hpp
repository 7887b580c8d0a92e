#pragma once

// Frozen constants of the synthetic episode oracle.

#include <array>

namespace deploygate::oracle_constants {

// Friction/mass logit on raw values. Its zero set is the boundary curve
// mu*(m) = (1.469 + 0.419 m) / (3.691 - 1.400 m).
inline constexpr double kIntercept = -1.469;
inline constexpr double kFriction = 3.691;
inline constexpr double kMass = -0.419;
inline constexpr double kFrictionMass = -1.400;

// Additional effects on standardized features.
inline constexpr double kIkNoise = -0.288;
inline constexpr double kFrictionSize = 0.190;
inline constexpr double kMassObstacles = 0.079;

// Standardization moments: mean and sd of each feature under uniform LHS over
// the Franka space (log-uniform friction and mass, uniform size and IK noise,
// discrete-uniform obstacles). Closed forms:
//   log-uniform [a,b]: mean = (b-a)/ln(b/a), E[x^2] = (b^2-a^2)/(2 ln(b/a))
//   uniform [a,b]:     mean = (a+b)/2,      sd = (b-a)/sqrt(12)
//   integers {a..b}:   mean = (a+b)/2,      sd = sqrt(((b-a+1)^2-1)/12)
inline constexpr double kFrictionMean = 0.36185667751074363;
inline constexpr double kFrictionSd = 0.30857765373581490;
inline constexpr double kMassMean = 0.52861580982954270;
inline constexpr double kMassSd = 0.51224655262240480;
inline constexpr double kSizeMean = 0.07;
inline constexpr double kSizeSd = 0.028867513459481287;
inline constexpr double kIkNoiseMean = 0.02;
inline constexpr double kIkNoiseSd = 0.011547005383792516;
inline constexpr double kObstaclesMean = 2.5;
inline constexpr double kObstaclesSd = 1.7078251276599330;

// Friction bin edges of the failure-mode mix.
inline constexpr std::array<double, 8> kModeBinEdges = {0.050, 0.108, 0.165, 0.280, 0.450, 0.625, 0.768, 1.200};

// Overall failure-mode shares used to spread the non-dominant mass of each
// bin: timeout, collision, grip_loss, grasp_miss.
inline constexpr std::array<double, 4> kGlobalModeShare = {0.381, 0.204, 0.266, 0.149};

// No other mode may come within this margin of a bin's dominant mode.
inline constexpr double kDominanceMargin = 0.02;

inline constexpr double kTimeoutSeconds = 15.0;
inline constexpr double kSuccessCycleMin = 1.0;
inline constexpr double kSuccessCycleMax = 6.0;
inline constexpr double kFailureCycleMin = 1.0;
inline constexpr double kFailureCycleMax = 14.9;

// UR5e suction-gripper logit: intercept + mass_slope * mass + ik_slope * ik_noise.
// The intercept is the root of (analytic uniform-LHS success rate = 0.743)
// found by calibrate_ur5e_intercept; the test suite re-derives it.
inline constexpr double kUr5eMassSlope = -1.5;
inline constexpr double kUr5eIkSlope = -60.0;
inline constexpr double kUr5eTargetSr = 0.743;
inline constexpr double kUr5eIntercept = 2.9722288246718889;

}  // namespace deploygate::oracle_constants
