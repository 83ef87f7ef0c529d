#ifndef RRSGD_DIAGNOSTICS_HPP
#define RRSGD_DIAGNOSTICS_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "rrsgd/chains.hpp"
#include "rrsgd/problems.hpp"

namespace rrsgd {

/// Mixing block length m(gamma) = ceil(2 log 4 / (gamma mu)).
std::int64_t mixing_block_length(double gamma, double mu);

/// The step-size-weighted semimetric
/// c(x, y) = ||x - y|| (||x - t*|| + ||y - t*|| + 2 sqrt(2) tau2 sqrt(gamma) / sqrt(mu)).
double cost_function_c(const Vector& theta, const Vector& theta_prime, const Vector& theta_star,
                       double gamma, double mu, double tau2);

/// Monte-Carlo decay of E[c(theta_k, theta~_k)] under synchronous coupling.
struct DecayCurve {
  std::vector<std::int64_t> ks;
  std::vector<double> values;
  std::vector<double> std_errs;
  double gamma = 0.0;
  std::int64_t m_gamma = 0;
};

DecayCurve coupling_contraction_curve(const ProblemSpec& problem, double gamma,
                                      const Vector& theta0_a, const Vector& theta0_b,
                                      std::int64_t max_k, std::int64_t replications,
                                      std::uint64_t seed, int workers = 0);

struct MomentEstimate {
  double estimate = 0.0;
  double std_err = 0.0;
};

/// Time-average estimate of E_pi[||theta - theta*||^p] with batch-means
/// standard error (30 batches). burn_in = 0 selects the default 10 m(gamma);
/// an explicit burn_in below 10 m(gamma) is rejected.
MomentEstimate stationary_moment_estimate(const ProblemSpec& problem, double gamma, int p,
                                          std::int64_t burn_in, std::int64_t samples,
                                          std::uint64_t seed);

/// Least-squares fit of log y against log x.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;  // log-scale intercept: log y ~ intercept + slope * log x
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> points;
};

RateFit fit_rate_exponent(const std::vector<std::pair<double, double>>& points);

/// Reconstruction residual of the tail-average identity
///   H*(avg - theta*) = (theta_{n+1} - theta_{2n+1})/(gamma n)
///                      - avg_k noise_{k+1}(theta_k) - avg_k eta(theta_k)
/// over k = n+1 .. 2n, with the noise terms replayed from the run's stream.
struct AuditResult {
  double max_residual = 0.0;  // max absolute component mismatch
  double scale = 0.0;         // max absolute component over the reconstruction terms
  double relative() const { return scale > 0.0 ? max_residual / scale : max_residual; }
};

AuditResult decomposition_audit(const ProblemSpec& problem, const ChainRun& run);

}  // namespace rrsgd

#endif  // RRSGD_DIAGNOSTICS_HPP
