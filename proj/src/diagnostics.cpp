#include "rrsgd/diagnostics.hpp"

#include <cmath>

#include "rrsgd/parallel.hpp"
#include "rrsgd/theory.hpp"

namespace rrsgd {

std::int64_t mixing_block_length(double gamma, double mu) {
  require(gamma > 0.0 && mu > 0.0, "mixing_block_length: gamma and mu must be positive");
  return static_cast<std::int64_t>(std::ceil(2.0 * std::log(4.0) / (gamma * mu)));
}

double cost_function_c(const Vector& theta, const Vector& theta_prime, const Vector& theta_star,
                       double gamma, double mu, double tau2) {
  require(gamma > 0.0 && mu > 0.0, "cost_function_c: gamma and mu must be positive");
  require(theta.size() == theta_prime.size() && theta.size() == theta_star.size(),
          "cost_function_c: dimension mismatch");
  const double radius_term = (theta - theta_star).norm() + (theta_prime - theta_star).norm() +
                             2.0 * std::sqrt(2.0) * tau2 * std::sqrt(gamma) / std::sqrt(mu);
  return (theta - theta_prime).norm() * radius_term;
}

DecayCurve coupling_contraction_curve(const ProblemSpec& problem, double gamma,
                                      const Vector& theta0_a, const Vector& theta0_b,
                                      std::int64_t max_k, std::int64_t replications,
                                      std::uint64_t seed, int workers) {
  require(max_k >= 0, "coupling_contraction_curve: max_k must be non-negative");
  require(replications >= 1, "coupling_contraction_curve: replications must be positive");
  problem.check_theta(theta0_a);
  problem.check_theta(theta0_b);

  const double tau2 = problem.tau2();
  const double mu = problem.mu();
  const Vector& theta_star = problem.theta_star();
  const std::size_t npoints = static_cast<std::size_t>(max_k) + 1;

  // Per-replication rows; reduced in replication order afterwards so the
  // curve is bitwise independent of the worker count.
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(replications));
  parallel_for(replications, workers, [&](std::int64_t r) {
    std::vector<double>& row = rows[static_cast<std::size_t>(r)];
    row.resize(npoints);
    NoiseStream stream(seed, static_cast<std::uint64_t>(r));
    run_synchronously_coupled(problem, theta0_a, theta0_b, gamma, max_k, stream,
                              [&](std::int64_t k, const Vector& a, const Vector& b) {
                                row[static_cast<std::size_t>(k)] =
                                    cost_function_c(a, b, theta_star, gamma, mu, tau2);
                              });
  });

  DecayCurve curve;
  curve.gamma = gamma;
  curve.m_gamma = mixing_block_length(gamma, mu);
  curve.ks.resize(npoints);
  curve.values.resize(npoints);
  curve.std_errs.resize(npoints);
  const double inv_r = 1.0 / static_cast<double>(replications);
  for (std::size_t k = 0; k < npoints; ++k) {
    double sum = 0.0;
    for (const auto& row : rows) sum += row[k];
    const double mean = sum * inv_r;
    double ss = 0.0;
    for (const auto& row : rows) ss += (row[k] - mean) * (row[k] - mean);
    curve.ks[k] = static_cast<std::int64_t>(k);
    curve.values[k] = mean;
    curve.std_errs[k] =
        replications > 1 ? std::sqrt(ss / static_cast<double>(replications - 1)) *
                               std::sqrt(inv_r)
                         : 0.0;
  }
  return curve;
}

MomentEstimate stationary_moment_estimate(const ProblemSpec& problem, double gamma, int p,
                                          std::int64_t burn_in, std::int64_t samples,
                                          std::uint64_t seed) {
  require(p >= 2 && p % 2 == 0, "stationary_moment_estimate: p must be a positive even integer");
  const std::int64_t min_burn_in = 10 * mixing_block_length(gamma, problem.mu());
  if (burn_in == 0) burn_in = min_burn_in;
  require(burn_in >= min_burn_in,
          "stationary_moment_estimate: burn_in must be at least 10*m(gamma)");
  constexpr std::int64_t kBatches = 30;
  require(samples >= kBatches, "stationary_moment_estimate: need at least 30 samples");

  const std::int64_t batch = samples / kBatches;
  const std::int64_t effective = batch * kBatches;
  const int dd = problem.draw_dim();
  NoiseStream stream(seed, 0);
  Vector theta = problem.theta_star();
  for (std::int64_t k = 0; k < burn_in; ++k) {
    theta -= gamma * problem.stoch_gradient_from_draw(theta, stream.next_gaussians(dd));
    if (!theta.allFinite())
      throw DivergenceError("stationary_moment_estimate: divergence during burn-in",
                            static_cast<std::uint64_t>(k));
  }
  std::vector<double> batch_means(static_cast<std::size_t>(kBatches), 0.0);
  double grand_sum = 0.0;
  for (std::int64_t k = 0; k < effective; ++k) {
    theta -= gamma * problem.stoch_gradient_from_draw(theta, stream.next_gaussians(dd));
    if (!theta.allFinite())
      throw DivergenceError("stationary_moment_estimate: divergence",
                            static_cast<std::uint64_t>(burn_in + k));
    const double value = std::pow((theta - problem.theta_star()).squaredNorm(), p / 2);
    grand_sum += value;
    batch_means[static_cast<std::size_t>(k / batch)] += value;
  }
  for (auto& b : batch_means) b /= static_cast<double>(batch);
  MomentEstimate out;
  out.estimate = grand_sum / static_cast<double>(effective);
  double ss = 0.0;
  const double bmean = out.estimate;
  for (const double b : batch_means) ss += (b - bmean) * (b - bmean);
  out.std_err = std::sqrt(ss / static_cast<double>(kBatches - 1)) /
                std::sqrt(static_cast<double>(kBatches));
  return out;
}

RateFit fit_rate_exponent(const std::vector<std::pair<double, double>>& points) {
  require(points.size() >= 3, "fit_rate_exponent: need at least 3 points");
  RateFit fit;
  fit.points = points;
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : points) {
    require(x > 0.0 && y > 0.0, "fit_rate_exponent: coordinates must be strictly positive");
    sx += std::log(x);
    sy += std::log(y);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mx;
    const double dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  require(sxx > 0.0, "fit_rate_exponent: x values must not be all equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_res = syy - fit.slope * sxy;
  fit.r_squared = syy > 0.0 ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
  return fit;
}

AuditResult decomposition_audit(const ProblemSpec& problem, const ChainRun& run) {
  require(run.record_stride == 1, "decomposition_audit: run must be recorded with stride 1");
  const std::int64_t n = run.n;
  require(static_cast<std::int64_t>(run.recorded_path.size()) == 2 * n + 1,
          "decomposition_audit: recorded path must cover k = 0 .. 2n");
  const Matrix hessian = problem.hessian_at_opt();
  const Vector& theta_star = problem.theta_star();
  const double gamma = run.gamma;
  const int dd = problem.draw_dim();
  NoiseStream stream(run.stream.seed, run.stream.index);

  // Average of the replayed noise terms and of eta over the tail window.
  Vector noise_sum = Vector::Zero(problem.dim());
  Vector eta_sum = Vector::Zero(problem.dim());
  for (std::int64_t k = n + 1; k <= 2 * n; ++k) {
    const Vector& theta_k = run.recorded_path[static_cast<std::size_t>(k)];
    const Vector draw = stream.gaussians_at(run.stream_start_counter + k, dd);
    const Vector grad = problem.gradient(theta_k);
    noise_sum += problem.stoch_gradient_from_draw(theta_k, draw) - grad;
    eta_sum += grad - hessian * (theta_k - theta_star);
  }
  const double inv_n = 1.0 / static_cast<double>(n);

  // The telescoped endpoint is theta_{2n+1}, one step past the run; derive it
  // from the counter-based stream without mutating any recorded state.
  const Vector& theta_2n = run.recorded_path[static_cast<std::size_t>(2 * n)];
  const Vector theta_2n_plus_1 =
      theta_2n - gamma * problem.stoch_gradient_from_draw(
                             theta_2n, stream.gaussians_at(run.stream_start_counter + 2 * n, dd));

  const Vector t_first = (run.theta_at_n_plus_1 - theta_star) / (gamma * static_cast<double>(n));
  const Vector t_last = (theta_2n_plus_1 - theta_star) / (gamma * static_cast<double>(n));
  const Vector t_noise = noise_sum * inv_n;
  const Vector t_eta = eta_sum * inv_n;

  const Vector lhs = hessian * (run.tail_average - theta_star);
  const Vector rhs = t_first - t_last - t_noise - t_eta;

  AuditResult out;
  out.max_residual = (lhs - rhs).cwiseAbs().maxCoeff();
  out.scale = std::max({t_first.cwiseAbs().maxCoeff(), t_last.cwiseAbs().maxCoeff(),
                        t_noise.cwiseAbs().maxCoeff(), t_eta.cwiseAbs().maxCoeff(),
                        lhs.cwiseAbs().maxCoeff()});
  return out;
}

}  // namespace rrsgd
