#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "deploygate/dictionary.hpp"

namespace deploygate {

/// Feature declaration. A feature name is a numeric dimension or one of
/// "shape_penalty" / "placement_penalty", optionally prefixed "z:"
/// (standardized) or "raw:" (unstandardized). Unprefixed names follow
/// `standardize`. Interactions multiply their two components.
struct FeatureSpec {
  std::vector<std::string> base;
  std::vector<std::pair<std::string, std::string>> interactions;
  bool standardize = true;
  /// Moments used instead of training-data moments for these raw features.
  std::map<std::string, Moments> fixed_standardization;

  bool operator==(const FeatureSpec&) const = default;
};

/// Every numeric dimension plus the two penalties, no interactions.
FeatureSpec risk_feature_spec(const ParamSpace& space);
/// The oracle's own functional form: raw friction and mass with their raw
/// product, standardized IK noise, friction x size and mass x obstacles on
/// standardized components, standardized by the space's uniform moments.
FeatureSpec interaction_feature_spec(const ParamSpace& space);
/// success ~ friction + mass + friction x mass on raw values.
FeatureSpec boundary_feature_spec();

/// box 0, cylinder 1, sphere 2, irregular 3.
double shape_penalty(const std::string& shape);
/// center_0..center_135 -> 0..3, edge_0..edge_135 -> 4..7.
double placement_penalty(const std::string& placement);

/// Design matrix without the intercept column, row-major.
struct Design {
  std::vector<std::string> names;
  std::vector<double> x;
  std::vector<double> y;  // 0/1
  std::size_t rows = 0;
  std::size_t cols = 0;

  double at(std::size_t i, std::size_t j) const { return x[i * cols + j]; }
};

using Standardization = std::map<std::string, Moments>;

/// Moments of every feature the spec standardizes: fixed ones from the spec,
/// the others from `ds` (population sd; an sd of 0 is replaced by 1).
Standardization fit_standardization(const Dataset& ds, const FeatureSpec& spec);
/// label = success.
Design build_features(const Dataset& ds, const FeatureSpec& spec, const Standardization& st);
Design build_features(const Dataset& ds, const FeatureSpec& spec);
std::vector<double> feature_row(const ScenarioConfig& cfg, const FeatureSpec& spec, const Standardization& st);
std::vector<std::string> feature_names(const FeatureSpec& spec);

enum class Target { Success, Failure };

struct RiskModel {
  FeatureSpec spec;
  Standardization standardization;
  Target target = Target::Success;
  std::vector<std::string> names;  // "intercept" then one per column
  std::vector<double> coef;
  std::vector<double> covariance;  // (p+1) x (p+1), row-major
  double ridge = 1e-6;
  bool converged = false;
  std::size_t iterations = 0;
  double log_likelihood = 0.0;

  std::size_t size() const noexcept { return coef.size(); }
  double cov(std::size_t i, std::size_t j) const { return covariance[i * coef.size() + j]; }
  bool operator==(const RiskModel&) const = default;
};

/// Ridge-penalized IRLS (intercept unpenalized). Only coef, covariance,
/// names, ridge and convergence fields are filled.
RiskModel fit_logistic(const Design& d, double ridge = 1e-6);

/// Builds features from `ds` and fits on success (or failure) labels.
RiskModel fit_risk_model(const Dataset& ds, const FeatureSpec& spec, Target target = Target::Success,
                         double ridge = 1e-6);

/// Gradient of the penalized log-likelihood at `coef`.
std::vector<double> penalized_gradient(const Design& d, const std::vector<double>& coef, double ridge);
double penalized_log_likelihood(const Design& d, const std::vector<double>& coef, double ridge);

struct WaldStat {
  std::string name;
  double coef = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p = 1.0;
};

std::vector<WaldStat> wald_stats(const RiskModel& model);
/// Two-sided p of a standard-normal z.
double two_sided_p(double z);

double linear_predictor(const RiskModel& model, const ScenarioConfig& cfg);
double predict_fail_prob(const RiskModel& model, const ScenarioConfig& cfg);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  double auc = 0.0;
  std::vector<RocPoint> curve;  // from (0,0) to (1,1)
};

/// Higher scores predict the positive label (1).
RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);
void write_roc_csv(std::ostream& out, const RocResult& roc);

/// Friction at which b0 + b1 mu + b2 m + b3 mu m = 0.
double boundary_curve(double b0, double b1, double b2, double b3, double m);

struct ThresholdEstimate {
  std::string dim;
  double threshold = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double se = 0.0;
  std::size_t iterations = 0;
  std::size_t discarded = 0;
};

/// Median over bootstrap resamples of the SR = 0.5 crossing of a univariate
/// success ~ dim fit. A resample is discarded when the slope is below 1e-9 in
/// magnitude, the fit fails, or the crossing leaves the resample's observed
/// range of `dim`.
ThresholdEstimate bootstrap_threshold(const Dataset& ds, const std::string& dim, std::size_t iters,
                                      std::uint64_t seed, std::size_t threads = 0);

/// Coefficient table: name, coefficient, z, p.
std::string format_coefficient_table(const RiskModel& model);
/// Threshold table: name, threshold, [lo, hi], se.
std::string format_threshold_table(const std::vector<ThresholdEstimate>& rows);

void write_model(std::ostream& out, const RiskModel& model);
RiskModel read_model(std::istream& in);

}  // namespace deploygate
