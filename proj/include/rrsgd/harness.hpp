#ifndef RRSGD_HARNESS_HPP
#define RRSGD_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rrsgd/chains.hpp"
#include "rrsgd/diagnostics.hpp"
#include "rrsgd/problems.hpp"
#include "rrsgd/theory.hpp"

namespace rrsgd {

enum class Estimator { PR, RR };

std::string to_string(Estimator est);
Estimator estimator_from_string(const std::string& name);

/// Step-size rule over the n grid: an explicit list paired with n_grid
/// (a single value broadcasts) or the power rule gamma = a * n^-beta.
struct GammaRule {
  enum class Kind { Explicit, Power };
  Kind kind = Kind::Power;
  std::vector<double> gammas;
  double a = 1.0;
  double beta = 0.5;

  double gamma_for(std::int64_t n, std::size_t grid_index) const;
  std::string describe() const;
};

struct Theta0Spec {
  enum class Mode { AtOptimum, Offset, Explicit };
  Mode mode = Mode::Offset;
  double radius = 1.0;  // Offset: theta* + radius * (1,..,1)/sqrt(d)
  Vector value;         // Explicit

  Vector resolve(const ProblemSpec& problem) const;
};

struct ExperimentConfig {
  std::vector<Estimator> estimators{Estimator::PR};
  std::vector<std::int64_t> n_grid;
  GammaRule gamma_rule;
  std::int64_t replications = 2;
  std::uint64_t master_seed = 0;
  std::vector<int> p_moments{2};
  Theta0Spec theta0;
  int workers = 0;
  long noise_mc_samples = 200000;

  void validate(const ProblemSpec& problem) const;  // throws ConfigError
};

/// One grid cell x one moment order.
struct RowRecord {
  Estimator estimator = Estimator::PR;
  std::int64_t n = 0;
  double gamma = 0.0;
  int p = 2;
  double error_moment = 0.0;             // E^{1/p} || H* (est - theta*) ||^p
  double std_err = 0.0;                  // jackknife over replications
  double error_moment_unweighted = 0.0;  // same with the unweighted norm
  Vector bias_vector;                    // mean of (est - theta*)
  double bias_norm = 0.0;
  std::int64_t replications = 0;
  std::int64_t divergences = 0;
  bool valid = true;
};

struct ExperimentResult {
  std::vector<RowRecord> rows;
  std::vector<std::pair<std::string, RateFit>> rate_fits;
  TheoryReport theory;
  std::uint64_t master_seed = 0;
  std::string config_hash;   // filled by the CLI layer
  std::string code_version;  // filled by the CLI layer
};

/// Seed handed to estimate_error_moments for one grid cell, so that cell
/// randomness is a function of (master_seed, estimator, grid index) only.
std::uint64_t derive_cell_seed(std::uint64_t master_seed, Estimator est, std::size_t grid_index);

/// Monte-Carlo rows for one grid cell; replication r uses stream_index = r.
/// Divergent replications are counted and mark the rows invalid.
std::vector<RowRecord> estimate_error_moments(const ProblemSpec& problem, Estimator est,
                                              std::int64_t n, double gamma,
                                              const std::vector<int>& p_list,
                                              std::int64_t replications,
                                              std::uint64_t master_seed, const Vector& theta0,
                                              int workers = 0);

/// Full grid; bitwise deterministic for a fixed master_seed, independent of
/// the worker count.
ExperimentResult run_experiment(const ProblemSpec& problem, const ExperimentConfig& config);

/// Fit of the second-order error term: residuals error_moment(n) - sqrt(Tr
/// noise_cov)/sqrt(n) against n, dropping residuals at or below the floor of
/// 2 standard errors. Throws DegenerateFitError when fewer than 3 residuals
/// survive the floor.
RateFit second_order_residual(const ExperimentResult& result, Estimator est, int p = 2);

}  // namespace rrsgd

#endif  // RRSGD_HARNESS_HPP
