#include "deploygate/risk_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "deploygate/error.hpp"
#include "deploygate/parallel.hpp"
#include "deploygate/rng.hpp"

namespace deploygate {

namespace {

struct FeatureRef {
  std::string name;
  bool standardized = true;
};

FeatureRef parse_ref(const std::string& text, bool standardize_default) {
  if (text.rfind("z:", 0) == 0) return {text.substr(2), true};
  if (text.rfind("raw:", 0) == 0) return {text.substr(4), false};
  return {text, standardize_default};
}

std::string ref_label(const FeatureRef& r) { return r.standardized ? r.name : "raw:" + r.name; }

double raw_value(const ScenarioConfig& cfg, const std::string& name) {
  if (name == "shape_penalty") return shape_penalty(cfg.label("shape"));
  if (name == "placement_penalty") return placement_penalty(cfg.label("placement"));
  return cfg.number(name);
}

double component(const ScenarioConfig& cfg, const FeatureRef& r, const Standardization& st) {
  const double v = raw_value(cfg, r.name);
  if (!r.standardized) return v;
  auto it = st.find(r.name);
  if (it == st.end()) throw Error("no standardization for feature '" + r.name + "'");
  return (v - it->second.mean) / it->second.sd;
}

std::vector<std::pair<FeatureRef, std::optional<FeatureRef>>> resolve(const FeatureSpec& spec) {
  std::vector<std::pair<FeatureRef, std::optional<FeatureRef>>> out;
  for (const auto& b : spec.base) out.emplace_back(parse_ref(b, spec.standardize), std::nullopt);
  for (const auto& [a, b] : spec.interactions)
    out.emplace_back(parse_ref(a, spec.standardize), parse_ref(b, spec.standardize));
  return out;
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

Eigen::MatrixXd with_intercept(const Design& d) {
  Eigen::MatrixXd x(d.rows, d.cols + 1);
  for (std::size_t i = 0; i < d.rows; ++i) {
    x(i, 0) = 1.0;
    for (std::size_t j = 0; j < d.cols; ++j) x(i, j + 1) = d.at(i, j);
  }
  return x;
}

double pll(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta, double ridge) {
  const Eigen::VectorXd eta = x * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - softplus(eta(i));
  return ll - 0.5 * ridge * beta.tail(beta.size() - 1).squaredNorm();
}

Eigen::MatrixXd information(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta, double ridge,
                            Eigen::VectorXd* prob = nullptr) {
  const Eigen::VectorXd eta = x * beta;
  Eigen::VectorXd p(eta.size()), w(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    p(i) = sigmoid(eta(i));
    w(i) = p(i) * (1.0 - p(i));
  }
  Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x;
  for (Eigen::Index j = 1; j < h.rows(); ++j) h(j, j) += ridge;
  if (prob) *prob = p;
  return h;
}

Eigen::LDLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& h) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  if (ldlt.info() != Eigen::Success) throw NumericalError("singular system");
  const Eigen::VectorXd d = ldlt.vectorD();
  const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  if (!d.allFinite() || d.minCoeff() <= 1e-13 * scale) throw NumericalError("singular system");
  return ldlt;
}

}  // namespace

FeatureSpec risk_feature_spec(const ParamSpace& space) {
  FeatureSpec spec;
  for (const auto& d : space.dims())
    if (d.kind() != ParamKind::Categorical) spec.base.push_back(d.name());
  if (space.find("shape")) spec.base.push_back("shape_penalty");
  if (space.find("placement")) spec.base.push_back("placement_penalty");
  return spec;
}

FeatureSpec interaction_feature_spec(const ParamSpace& space) {
  FeatureSpec spec;
  spec.base = {"raw:friction", "raw:mass", "z:ik_noise"};
  spec.interactions = {{"raw:friction", "raw:mass"}, {"z:friction", "z:size"}, {"z:mass", "z:obstacles"}};
  for (const char* dim : {"friction", "mass", "ik_noise", "size", "obstacles"}) {
    const ParamDef* d = space.find(dim);
    if (d == nullptr) throw DomainError(space.name() + " has no '" + dim + "' dimension");
    spec.fixed_standardization[dim] = uniform_moments(*d);
  }
  return spec;
}

FeatureSpec boundary_feature_spec() {
  FeatureSpec spec;
  spec.base = {"raw:friction", "raw:mass"};
  spec.interactions = {{"raw:friction", "raw:mass"}};
  return spec;
}

double shape_penalty(const std::string& shape) {
  static const char* kShapes[] = {"box", "cylinder", "sphere", "irregular"};
  for (int i = 0; i < 4; ++i)
    if (shape == kShapes[i]) return i;
  throw DomainError("shape: unknown category '" + shape + "'");
}

double placement_penalty(const std::string& placement) {
  static const char* kAngles[] = {"0", "45", "90", "135"};
  for (int group = 0; group < 2; ++group) {
    const std::string prefix = group == 0 ? "center_" : "edge_";
    if (placement.rfind(prefix, 0) != 0) continue;
    const std::string angle = placement.substr(prefix.size());
    for (int i = 0; i < 4; ++i)
      if (angle == kAngles[i]) return group * 4 + i;
  }
  throw DomainError("placement: unknown category '" + placement + "'");
}

std::vector<std::string> feature_names(const FeatureSpec& spec) {
  std::vector<std::string> out;
  for (const auto& [a, b] : resolve(spec)) out.push_back(b ? ref_label(a) + "*" + ref_label(*b) : ref_label(a));
  return out;
}

Standardization fit_standardization(const Dataset& ds, const FeatureSpec& spec) {
  std::set<std::string> wanted;
  for (const auto& [a, b] : resolve(spec)) {
    if (a.standardized) wanted.insert(a.name);
    if (b && b->standardized) wanted.insert(b->name);
  }
  Standardization st;
  for (const auto& name : wanted) {
    if (auto it = spec.fixed_standardization.find(name); it != spec.fixed_standardization.end()) {
      st[name] = it->second;
      continue;
    }
    if (ds.records.empty()) throw DomainError("cannot standardize '" + name + "' on an empty dataset");
    double mean = 0.0;
    for (const auto& r : ds.records) mean += raw_value(r.config, name);
    mean /= static_cast<double>(ds.records.size());
    double ss = 0.0;
    for (const auto& r : ds.records) {
      const double dv = raw_value(r.config, name) - mean;
      ss += dv * dv;
    }
    const double sd = std::sqrt(ss / static_cast<double>(ds.records.size()));
    st[name] = {mean, sd > 0.0 ? sd : 1.0};
  }
  return st;
}

std::vector<double> feature_row(const ScenarioConfig& cfg, const FeatureSpec& spec, const Standardization& st) {
  std::vector<double> row;
  for (const auto& [a, b] : resolve(spec)) {
    double v = component(cfg, a, st);
    if (b) v *= component(cfg, *b, st);
    row.push_back(v);
  }
  return row;
}

Design build_features(const Dataset& ds, const FeatureSpec& spec, const Standardization& st) {
  Design d;
  d.names = feature_names(spec);
  d.cols = d.names.size();
  d.rows = ds.records.size();
  d.x.reserve(d.rows * d.cols);
  d.y.reserve(d.rows);
  for (const auto& r : ds.records) {
    const auto row = feature_row(r.config, spec, st);
    d.x.insert(d.x.end(), row.begin(), row.end());
    d.y.push_back(r.outcome.success ? 1.0 : 0.0);
  }
  return d;
}

Design build_features(const Dataset& ds, const FeatureSpec& spec) {
  return build_features(ds, spec, fit_standardization(ds, spec));
}

double penalized_log_likelihood(const Design& d, const std::vector<double>& coef, double ridge) {
  if (coef.size() != d.cols + 1) throw DomainError("coefficient count does not match design");
  const Eigen::MatrixXd x = with_intercept(d);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.y.data(), d.rows);
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(coef.data(), coef.size());
  return pll(x, y, b, ridge);
}

std::vector<double> penalized_gradient(const Design& d, const std::vector<double>& coef, double ridge) {
  if (coef.size() != d.cols + 1) throw DomainError("coefficient count does not match design");
  const Eigen::MatrixXd x = with_intercept(d);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.y.data(), d.rows);
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(coef.data(), coef.size());
  const Eigen::VectorXd eta = x * b;
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) resid(i) = y(i) - sigmoid(eta(i));
  Eigen::VectorXd g = x.transpose() * resid;
  g.tail(g.size() - 1) -= ridge * b.tail(b.size() - 1);
  return {g.data(), g.data() + g.size()};
}

RiskModel fit_logistic(const Design& d, double ridge) {
  if (d.rows == 0) throw DomainError("logistic fit needs at least one row");
  if (d.x.size() != d.rows * d.cols || d.y.size() != d.rows) throw DomainError("malformed design");
  if (!(ridge >= 0.0)) throw DomainError("ridge must be non-negative");
  for (double v : d.y)
    if (v != 0.0 && v != 1.0) throw DomainError("labels must be 0 or 1");

  const Eigen::MatrixXd x = with_intercept(d);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.y.data(), d.rows);
  const Eigen::Index p = x.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);

  RiskModel m;
  m.ridge = ridge;
  double ll = pll(x, y, beta, ridge);
  for (std::size_t it = 1; it <= 100; ++it) {
    Eigen::VectorXd prob;
    const Eigen::MatrixXd h = information(x, beta, ridge, &prob);
    Eigen::VectorXd g = x.transpose() * (y - prob);
    g.tail(p - 1) -= ridge * beta.tail(p - 1);
    Eigen::VectorXd step = factor(h).solve(g);
    double t = 1.0;
    double next = pll(x, y, beta + step, ridge);
    while (!(next >= ll - 1e-12 * std::abs(ll)) && t > 1e-10) {
      t *= 0.5;
      next = pll(x, y, beta + t * step, ridge);
    }
    step *= t;
    beta += step;
    ll = next;
    m.iterations = it;
    if (step.cwiseAbs().maxCoeff() < 1e-8) {
      m.converged = true;
      break;
    }
  }
  if (!beta.allFinite()) throw NumericalError("logistic fit diverged");
  const Eigen::MatrixXd cov = factor(information(x, beta, ridge)).solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());

  m.names.push_back("intercept");
  m.names.insert(m.names.end(), d.names.begin(), d.names.end());
  m.coef.assign(beta.data(), beta.data() + p);
  m.covariance.resize(static_cast<std::size_t>(p * p));
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) m.covariance[static_cast<std::size_t>(i * p + j)] = sym(i, j);
  m.log_likelihood = ll;
  return m;
}

RiskModel fit_risk_model(const Dataset& ds, const FeatureSpec& spec, Target target, double ridge) {
  const Standardization st = fit_standardization(ds, spec);
  Design d = build_features(ds, spec, st);
  if (target == Target::Failure)
    for (auto& v : d.y) v = 1.0 - v;
  RiskModel m = fit_logistic(d, ridge);
  m.spec = spec;
  m.standardization = st;
  m.target = target;
  return m;
}

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

std::vector<WaldStat> wald_stats(const RiskModel& model) {
  if (!model.converged) throw DomainError("model did not converge");
  std::vector<WaldStat> out;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const double var = model.cov(i, i);
    if (!(var > 0.0)) throw NumericalError("zero variance for '" + model.names[i] + "'");
    WaldStat w;
    w.name = model.names[i];
    w.coef = model.coef[i];
    w.se = std::sqrt(var);
    w.z = w.coef / w.se;
    w.p = two_sided_p(w.z);
    out.push_back(w);
  }
  return out;
}

double linear_predictor(const RiskModel& model, const ScenarioConfig& cfg) {
  const auto row = feature_row(cfg, model.spec, model.standardization);
  if (row.size() + 1 != model.size()) throw SchemaError("model has " + std::to_string(model.size()) + " coefficients");
  double eta = model.coef[0];
  for (std::size_t j = 0; j < row.size(); ++j) eta += model.coef[j + 1] * row[j];
  return eta;
}

double predict_fail_prob(const RiskModel& model, const ScenarioConfig& cfg) {
  const double s = sigmoid(linear_predictor(model, cfg));
  return std::clamp(model.target == Target::Success ? 1.0 - s : s, 0.0, 1.0);
}

RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw DomainError("scores and labels differ in length");
  std::uint64_t npos = 0, nneg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DomainError("labels must be 0 or 1");
    if (std::isnan(scores[i])) throw DomainError("score is NaN");
    (labels[i] ? npos : nneg) += 1;
  }
  if (npos == 0 || nneg == 0) throw DomainError("roc needs both classes");

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the midrank of each tie group keeps the rank sum integral, so the
  // statistic equals exhaustive pair counting exactly.
  std::uint64_t rank2 = 0;
  for (std::size_t a = 0; a < order.size();) {
    std::size_t b = a;
    while (b < order.size() && scores[order[b]] == scores[order[a]]) ++b;
    std::uint64_t pos = 0;
    for (std::size_t k = a; k < b; ++k) pos += labels[order[k]];
    rank2 += pos * static_cast<std::uint64_t>(a + 1 + b);
    a = b;
  }
  const std::uint64_t u2 = rank2 - npos * (npos + 1);
  RocResult out;
  out.auc = static_cast<double>(u2) / (2.0 * static_cast<double>(npos) * static_cast<double>(nneg));

  out.curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t a = order.size(); a > 0;) {
    std::size_t b = a;
    while (b > 0 && scores[order[b - 1]] == scores[order[a - 1]]) {
      --b;
      (labels[order[b]] ? tp : fp) += 1;
    }
    out.curve.push_back({scores[order[a - 1]], static_cast<double>(fp) / static_cast<double>(nneg),
                         static_cast<double>(tp) / static_cast<double>(npos)});
    a = b;
  }
  return out;
}

void write_roc_csv(std::ostream& out, const RocResult& roc) {
  out << "threshold,fpr,tpr\n";
  for (const auto& p : roc.curve)
    out << format_number(p.threshold) << ',' << format_number(p.fpr) << ',' << format_number(p.tpr) << '\n';
}

double boundary_curve(double b0, double b1, double b2, double b3, double m) {
  const double den = b1 + b3 * m;
  if (std::abs(den) < 1e-12) throw NumericalError("boundary curve is singular at m = " + format_number(m));
  return -(b0 + b2 * m) / den;
}

namespace {

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::optional<double> resample_threshold(const std::vector<double>& xs, const std::vector<double>& ys,
                                         std::uint64_t seed, std::size_t iter) {
  const std::size_t n = xs.size();
  Stream s(seed, "bootstrap", iter);
  Design d;
  d.names = {"x"};
  d.rows = n;
  d.cols = 1;
  d.x.resize(n);
  d.y.resize(n);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, mean = 0.0, ysum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = s.below(n);
    d.x[i] = xs[k];
    d.y[i] = ys[k];
    lo = std::min(lo, xs[k]);
    hi = std::max(hi, xs[k]);
    mean += xs[k];
    ysum += ys[k];
  }
  if (ysum == 0.0 || ysum == static_cast<double>(n)) return std::nullopt;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : d.x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0)) return std::nullopt;
  for (double& v : d.x) v = (v - mean) / sd;
  RiskModel m;
  try {
    m = fit_logistic(d, 1e-6);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
  if (!m.converged) return std::nullopt;
  const double slope = m.coef[1] / sd;
  if (!(std::abs(slope) >= 1e-9)) return std::nullopt;
  const double t = mean - m.coef[0] * sd / m.coef[1];
  if (!std::isfinite(t) || t < lo || t > hi) return std::nullopt;
  return t;
}

}  // namespace

ThresholdEstimate bootstrap_threshold(const Dataset& ds, const std::string& dim, std::size_t iters,
                                      std::uint64_t seed, std::size_t threads) {
  const ParamDef* def = ds.space.find(dim);
  if (def == nullptr) throw DomainError("unknown dimension '" + dim + "'");
  if (!def->continuous()) throw DomainError("'" + dim + "' is not continuous");
  if (iters == 0) throw DomainError("bootstrap needs at least one iteration");
  const auto c = ds.counts();
  if (c.n_success == 0 || c.n_fail == 0) throw DomainError("bootstrap needs both outcomes");

  std::vector<double> xs, ys;
  xs.reserve(c.n);
  ys.reserve(c.n);
  for (const auto& r : ds.records) {
    xs.push_back(r.config.number(dim));
    ys.push_back(r.outcome.success ? 1.0 : 0.0);
  }
  std::vector<std::optional<double>> results(iters);
  parallel_for(iters, threads, [&](std::size_t, std::size_t i) { results[i] = resample_threshold(xs, ys, seed, i); });

  std::vector<double> kept;
  for (const auto& r : results)
    if (r) kept.push_back(*r);
  ThresholdEstimate est;
  est.dim = dim;
  est.iterations = iters;
  est.discarded = iters - kept.size();
  if (2 * est.discarded > iters) throw NumericalError("threshold unidentifiable for '" + dim + "'");
  std::sort(kept.begin(), kept.end());
  est.threshold = percentile(kept, 0.5);
  est.ci_lo = percentile(kept, 0.025);
  est.ci_hi = percentile(kept, 0.975);
  if (kept.size() > 1) {
    double mean = 0.0;
    for (double v : kept) mean += v;
    mean /= static_cast<double>(kept.size());
    double ss = 0.0;
    for (double v : kept) ss += (v - mean) * (v - mean);
    est.se = std::sqrt(ss / static_cast<double>(kept.size() - 1));
  }
  return est;
}

std::string format_coefficient_table(const RiskModel& model) {
  auto stats = wald_stats(model);
  stats.erase(stats.begin());
  std::stable_sort(stats.begin(), stats.end(),
                   [](const WaldStat& a, const WaldStat& b) { return std::abs(a.z) > std::abs(b.z); });
  std::string out;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-26s %8s %8s %10s\n", "feature", "coef", "z", "p");
  out += buf;
  for (const auto& w : stats) {
    char p[32];
    if (w.p < 1e-5) std::snprintf(p, sizeof p, "<1e-05");
    else if (w.p < 1e-3) std::snprintf(p, sizeof p, "%.1e", w.p);
    else std::snprintf(p, sizeof p, "%.3f", w.p);
    std::snprintf(buf, sizeof buf, "%-26s %8.3f %8.2f %10s\n", w.name.c_str(), w.coef, w.z, p);
    out += buf;
  }
  return out;
}

std::string format_threshold_table(const std::vector<ThresholdEstimate>& rows) {
  std::string out;
  char buf[200];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s %.3f [%.3f, %.3f] %.3f\n", r.dim.c_str(), r.threshold, r.ci_lo, r.ci_hi, r.se);
    out += buf;
  }
  return out;
}

void write_model(std::ostream& out, const RiskModel& m) {
  out << "riskmodel 1\n";
  out << "target " << (m.target == Target::Success ? "success" : "failure") << '\n';
  out << "ridge " << format_number(m.ridge) << '\n';
  out << "converged " << (m.converged ? 1 : 0) << '\n';
  out << "iterations " << m.iterations << '\n';
  out << "loglik " << format_number(m.log_likelihood) << '\n';
  out << "standardize " << (m.spec.standardize ? 1 : 0) << '\n';
  for (const auto& b : m.spec.base) out << "base " << b << '\n';
  for (const auto& [a, b] : m.spec.interactions) out << "interaction " << a << ' ' << b << '\n';
  for (const auto& [k, v] : m.spec.fixed_standardization)
    out << "fixed " << k << ' ' << format_number(v.mean) << ' ' << format_number(v.sd) << '\n';
  for (const auto& [k, v] : m.standardization)
    out << "moment " << k << ' ' << format_number(v.mean) << ' ' << format_number(v.sd) << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) out << "coef " << m.names[i] << ' ' << format_number(m.coef[i]) << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << "cov";
    for (std::size_t j = 0; j < m.size(); ++j) out << ' ' << format_number(m.cov(i, j));
    out << '\n';
  }
  if (!out) throw Error("model write failed");
}

RiskModel read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "riskmodel 1") throw SchemaError("not a version-1 risk model");
  RiskModel m;
  m.spec.base.clear();
  std::vector<double> cov;
  std::size_t cov_rows = 0;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto word = [&]() {
      std::string w;
      if (!(ls >> w)) throw SchemaError("truncated '" + key + "' line " + std::to_string(lineno));
      return w;
    };
    auto num = [&]() { return parse_number(word()); };
    if (key == "target") {
      const std::string t = word();
      if (t != "success" && t != "failure") throw SchemaError("unknown target '" + t + "'");
      m.target = t == "success" ? Target::Success : Target::Failure;
    } else if (key == "ridge") {
      m.ridge = num();
    } else if (key == "converged") {
      m.converged = word() == "1";
    } else if (key == "iterations") {
      m.iterations = static_cast<std::size_t>(std::stoull(word()));
    } else if (key == "loglik") {
      m.log_likelihood = num();
    } else if (key == "standardize") {
      m.spec.standardize = word() == "1";
    } else if (key == "base") {
      m.spec.base.push_back(word());
    } else if (key == "interaction") {
      std::string a = word();
      m.spec.interactions.emplace_back(a, word());
    } else if (key == "fixed" || key == "moment") {
      std::string name = word();
      Moments mo{num(), num()};
      if (!(mo.sd > 0.0)) throw SchemaError("non-positive sd for '" + name + "'");
      (key == "fixed" ? m.spec.fixed_standardization : m.standardization)[name] = mo;
    } else if (key == "coef") {
      m.names.push_back(word());
      m.coef.push_back(num());
    } else if (key == "cov") {
      double v;
      std::string w;
      std::size_t count = 0;
      while (ls >> w) {
        v = parse_number(w);
        cov.push_back(v);
        ++count;
      }
      if (count != m.coef.size()) throw SchemaError("covariance row " + std::to_string(cov_rows) + " has wrong length");
      ++cov_rows;
    } else {
      throw SchemaError("unknown model key '" + key + "'");
    }
  }
  if (m.coef.empty() || cov_rows != m.coef.size()) throw SchemaError("risk model is incomplete");
  if (feature_names(m.spec).size() + 1 != m.coef.size()) throw SchemaError("coefficients do not match the feature spec");
  m.covariance = std::move(cov);
  return m;
}

}  // namespace deploygate
