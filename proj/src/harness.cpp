#include "rrsgd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rrsgd/parallel.hpp"
#include "rrsgd/rng.hpp"

namespace rrsgd {

std::string to_string(Estimator est) { return est == Estimator::PR ? "pr" : "rr"; }

Estimator estimator_from_string(const std::string& name) {
  if (name == "pr" || name == "PR") return Estimator::PR;
  if (name == "rr" || name == "RR") return Estimator::RR;
  throw ConfigError("unknown estimator '" + name + "' (expected pr or rr)");
}

double GammaRule::gamma_for(std::int64_t n, std::size_t grid_index) const {
  if (kind == Kind::Power) return a * std::pow(static_cast<double>(n), -beta);
  if (gammas.size() == 1) return gammas[0];
  require(grid_index < gammas.size(), "GammaRule: grid index out of range");
  return gammas[grid_index];
}

std::string GammaRule::describe() const {
  if (kind == Kind::Power)
    return "power(a=" + std::to_string(a) + ", beta=" + std::to_string(beta) + ")";
  return "explicit(" + std::to_string(gammas.size()) + " values)";
}

Vector Theta0Spec::resolve(const ProblemSpec& problem) const {
  switch (mode) {
    case Mode::AtOptimum:
      return problem.theta_star();
    case Mode::Offset: {
      const int d = problem.dim();
      return problem.theta_star() +
             (radius / std::sqrt(static_cast<double>(d))) * Vector::Ones(d);
    }
    case Mode::Explicit:
      problem.check_theta(value);
      return value;
  }
  throw ArgumentError("Theta0Spec: invalid mode");
}

void ExperimentConfig::validate(const ProblemSpec& problem) const {
  std::vector<std::string> errors;
  if (estimators.empty()) errors.push_back("estimators must be non-empty");
  if (n_grid.empty()) errors.push_back("n_grid must be non-empty");
  for (const auto n : n_grid)
    if (n < 1) errors.push_back("n_grid entries must be positive");
  if (replications < 2) errors.push_back("replications must be at least 2");
  if (p_moments.empty()) errors.push_back("p_moments must be non-empty");
  for (const int p : p_moments)
    if (p < 2 || p % 2 != 0) errors.push_back("p_moments entries must be even and >= 2");
  if (gamma_rule.kind == GammaRule::Kind::Explicit) {
    if (gamma_rule.gammas.empty())
      errors.push_back("explicit gamma rule needs at least one value");
    else if (gamma_rule.gammas.size() != 1 && gamma_rule.gammas.size() != n_grid.size())
      errors.push_back("explicit gamma list must have one value or match n_grid length");
  } else {
    if (gamma_rule.a <= 0.0) errors.push_back("gamma power rule: a must be positive");
    if (gamma_rule.beta <= 0.0 || gamma_rule.beta >= 1.0)
      errors.push_back("gamma power rule: beta must lie in (0,1)");
  }
  const bool has_rr =
      std::find(estimators.begin(), estimators.end(), Estimator::RR) != estimators.end();
  if (errors.empty()) {
    for (std::size_t j = 0; j < n_grid.size(); ++j) {
      const double gamma = gamma_rule.gamma_for(n_grid[j], j);
      if (gamma <= 0.0) errors.push_back("gamma must be positive at every grid point");
      const double bound = 1.0 / (2.0 * problem.smoothness());
      // The PR step bound is advisory (the chain layer warns); the RR
      // invariant 2*gamma <= 1/(2L) is a hard config requirement.
      if (has_rr && 2.0 * gamma > bound)
        errors.push_back("RR requires 2*gamma <= 1/(2L)=" + std::to_string(bound) +
                         "; violated at n=" + std::to_string(n_grid[j]));
    }
  }
  if (!errors.empty()) {
    std::string msg = "experiment config invalid:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
}

std::uint64_t derive_cell_seed(std::uint64_t master_seed, Estimator est, std::size_t grid_index) {
  const std::uint64_t tag =
      (static_cast<std::uint64_t>(est == Estimator::RR ? 2 : 1) << 56) ^
      static_cast<std::uint64_t>(grid_index);
  return splitmix64(splitmix64(master_seed) ^ tag);
}

namespace {

double jackknife_root_moment_se(const std::vector<double>& powered, double sum, int p) {
  const std::size_t r = powered.size();
  if (r < 2) return 0.0;
  const double inv = 1.0 / static_cast<double>(r - 1);
  std::vector<double> loo(r);
  double loo_mean = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    loo[i] = std::pow(std::max(0.0, (sum - powered[i]) * inv), 1.0 / static_cast<double>(p));
    loo_mean += loo[i];
  }
  loo_mean /= static_cast<double>(r);
  double ss = 0.0;
  for (const double v : loo) ss += (v - loo_mean) * (v - loo_mean);
  return std::sqrt(ss * static_cast<double>(r - 1) / static_cast<double>(r));
}

}  // namespace

std::vector<RowRecord> estimate_error_moments(const ProblemSpec& problem, Estimator est,
                                              std::int64_t n, double gamma,
                                              const std::vector<int>& p_list,
                                              std::int64_t replications,
                                              std::uint64_t master_seed, const Vector& theta0,
                                              int workers) {
  require(replications >= 2, "estimate_error_moments: replications must be at least 2");
  require(!p_list.empty(), "estimate_error_moments: p_list must be non-empty");

  const std::size_t r_count = static_cast<std::size_t>(replications);
  std::vector<Vector> errors(r_count);
  std::vector<char> diverged(r_count, 0);
  parallel_for(replications, workers, [&](std::int64_t r) {
    try {
      Vector estimate;
      if (est == Estimator::PR) {
        NoiseStream stream(master_seed, static_cast<std::uint64_t>(r));
        estimate = run_tail_averaged(problem, theta0, gamma, n, stream).tail_average;
      } else {
        estimate = run_coupled_rr(problem, theta0, gamma, n,
                                  StreamKey{master_seed, static_cast<std::uint64_t>(r)})
                       .rr_estimate;
      }
      errors[static_cast<std::size_t>(r)] = estimate - problem.theta_star();
    } catch (const DivergenceError&) {
      diverged[static_cast<std::size_t>(r)] = 1;
    }
  });

  const Matrix hessian = problem.hessian_at_opt();
  std::int64_t divergences = 0;
  for (const char d : diverged) divergences += d;
  const std::int64_t used = replications - divergences;

  Vector bias = Vector::Zero(problem.dim());
  std::vector<double> weighted, unweighted;
  weighted.reserve(r_count);
  unweighted.reserve(r_count);
  for (std::size_t r = 0; r < r_count; ++r) {
    if (diverged[r]) continue;
    bias += errors[r];
    weighted.push_back((hessian * errors[r]).norm());
    unweighted.push_back(errors[r].norm());
  }
  if (used > 0) bias /= static_cast<double>(used);

  std::vector<RowRecord> rows;
  rows.reserve(p_list.size());
  for (const int p : p_list) {
    RowRecord row;
    row.estimator = est;
    row.n = n;
    row.gamma = gamma;
    row.p = p;
    row.replications = replications;
    row.divergences = divergences;
    row.valid = divergences == 0;
    row.bias_vector = bias;
    row.bias_norm = bias.norm();
    if (used > 0) {
      std::vector<double> powered_w(weighted.size()), powered_u(unweighted.size());
      double sum_w = 0.0, sum_u = 0.0;
      for (std::size_t i = 0; i < weighted.size(); ++i) {
        powered_w[i] = std::pow(weighted[i], p);
        powered_u[i] = std::pow(unweighted[i], p);
        sum_w += powered_w[i];
        sum_u += powered_u[i];
      }
      const double inv_used = 1.0 / static_cast<double>(used);
      row.error_moment = std::pow(sum_w * inv_used, 1.0 / static_cast<double>(p));
      row.error_moment_unweighted = std::pow(sum_u * inv_used, 1.0 / static_cast<double>(p));
      row.std_err = jackknife_root_moment_se(powered_w, sum_w, p);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

// First p to report fits for: 2 when requested, otherwise the lowest order.
int fit_moment_order(const std::vector<int>& p_moments) {
  if (std::find(p_moments.begin(), p_moments.end(), 2) != p_moments.end()) return 2;
  return *std::min_element(p_moments.begin(), p_moments.end());
}

}  // namespace

ExperimentResult run_experiment(const ProblemSpec& problem, const ExperimentConfig& config) {
  config.validate(problem);
  ExperimentResult result;
  result.master_seed = config.master_seed;
  result.theory = theory_report(problem, config.noise_mc_samples);
  const Vector theta0 = config.theta0.resolve(problem);

  for (const Estimator est : config.estimators) {
    for (std::size_t j = 0; j < config.n_grid.size(); ++j) {
      const std::int64_t n = config.n_grid[j];
      const double gamma = config.gamma_rule.gamma_for(n, j);
      const std::uint64_t cell_seed = derive_cell_seed(config.master_seed, est, j);
      auto rows = estimate_error_moments(problem, est, n, gamma, config.p_moments,
                                         config.replications, cell_seed, theta0, config.workers);
      for (auto& row : rows) result.rows.push_back(std::move(row));
    }
  }

  const int fit_p = fit_moment_order(config.p_moments);
  for (const Estimator est : config.estimators) {
    std::vector<std::pair<double, double>> bias_points, error_points;
    for (const auto& row : result.rows) {
      if (row.estimator != est || row.p != fit_p || !row.valid) continue;
      if (row.bias_norm > 0.0) bias_points.emplace_back(row.gamma, row.bias_norm);
      if (row.error_moment > 0.0)
        error_points.emplace_back(static_cast<double>(row.n), row.error_moment);
    }
    const std::string prefix = to_string(est);
    auto distinct_x = [](const std::vector<std::pair<double, double>>& pts) {
      std::vector<double> xs;
      for (const auto& [x, y] : pts) xs.push_back(x);
      std::sort(xs.begin(), xs.end());
      xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
      return xs.size();
    };
    if (bias_points.size() >= 3 && distinct_x(bias_points) >= 3)
      result.rate_fits.emplace_back(prefix + "_bias_vs_gamma", fit_rate_exponent(bias_points));
    if (error_points.size() >= 3 && distinct_x(error_points) >= 3)
      result.rate_fits.emplace_back(prefix + "_error_vs_n", fit_rate_exponent(error_points));
    try {
      result.rate_fits.emplace_back(prefix + "_second_order",
                                    second_order_residual(result, est, fit_p));
    } catch (const ArgumentError&) {
      // fewer than 4 grid points: no second-order fit
    } catch (const DegenerateFitError&) {
      // residuals below the Monte-Carlo floor: no second-order fit
    }
  }
  return result;
}

RateFit second_order_residual(const ExperimentResult& result, Estimator est, int p) {
  std::map<std::int64_t, const RowRecord*> by_n;
  for (const auto& row : result.rows) {
    if (row.estimator == est && row.p == p && row.valid) by_n[row.n] = &row;
  }
  require(by_n.size() >= 4, "second_order_residual: need at least 4 n-grid points");
  const double trace = result.theory.trace_noise_cov;
  require(trace > 0.0, "second_order_residual: theory trace of the noise covariance must be positive");

  std::vector<std::pair<double, double>> points;
  for (const auto& [n, row] : by_n) {
    const double leading = std::sqrt(trace) / std::sqrt(static_cast<double>(n));
    const double residual = row->error_moment - leading;
    const double floor = 2.0 * row->std_err;
    if (residual > floor) points.emplace_back(static_cast<double>(n), residual);
  }
  if (points.size() < 3)
    throw DegenerateFitError(
        "second_order_residual: residuals are at or below the Monte-Carlo floor");
  return fit_rate_exponent(points);
}

}  // namespace rrsgd
