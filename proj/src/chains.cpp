#include "rrsgd/chains.hpp"

#include <cstdio>

namespace rrsgd {

bool step_size_within_bound(const ProblemSpec& problem, double gamma) {
  return gamma > 0.0 && gamma <= 1.0 / (2.0 * problem.smoothness());
}

namespace {

void warn_step_size(const ProblemSpec& problem, double gamma, const char* where) {
  if (!step_size_within_bound(problem, gamma)) {
    std::fprintf(stderr, "rrsgd: warning: %s: gamma=%g exceeds 1/(2L)=%g\n", where, gamma,
                 1.0 / (2.0 * problem.smoothness()));
  }
}

}  // namespace

Vector sgd_step(const ProblemSpec& problem, const Vector& theta, double gamma,
                NoiseStream& stream) {
  require(gamma > 0.0, "sgd_step: gamma must be positive");
  problem.check_theta(theta);
  Vector next = theta - gamma * problem.stoch_gradient(theta, stream);
  if (!next.allFinite())
    throw DivergenceError("sgd_step: non-finite iterate", stream.counter());
  return next;
}

ChainRun run_tail_averaged(const ProblemSpec& problem, const Vector& theta0, double gamma,
                           std::int64_t n, NoiseStream& stream, int record_stride) {
  require(gamma > 0.0, "run_tail_averaged: gamma must be positive");
  require(n >= 1, "run_tail_averaged: n must be positive");
  require(record_stride >= 0, "run_tail_averaged: record_stride must be non-negative");
  problem.check_theta(theta0);
  warn_step_size(problem, gamma, "run_tail_averaged");

  ChainRun run;
  run.gamma = gamma;
  run.n = n;
  run.theta0 = theta0;
  run.stream = StreamKey{stream.master_seed(), stream.stream_index()};
  run.stream_start_counter = stream.counter();
  run.record_stride = record_stride;

  const int dd = problem.draw_dim();
  Vector theta = theta0;
  Vector tail_sum = Vector::Zero(problem.dim());
  if (record_stride > 0) {
    run.recorded_path.reserve(static_cast<std::size_t>(2 * n / record_stride) + 1);
    run.recorded_path.push_back(theta);
  }
  for (std::int64_t k = 1; k <= 2 * n; ++k) {
    theta -= gamma * problem.stoch_gradient_from_draw(theta, stream.next_gaussians(dd));
    if (!theta.allFinite())
      throw DivergenceError("run_tail_averaged: non-finite iterate at step " + std::to_string(k),
                            static_cast<std::uint64_t>(k));
    if (k == n + 1) run.theta_at_n_plus_1 = theta;
    if (k >= n + 1) tail_sum += theta;
    if (record_stride > 0 && k % record_stride == 0) run.recorded_path.push_back(theta);
  }
  run.theta_at_2n = theta;
  run.tail_average = tail_sum / static_cast<double>(n);
  return run;
}

Vector rr_combine(const Vector& avg_gamma, const Vector& avg_2gamma) {
  require(avg_gamma.size() == avg_2gamma.size(), "rr_combine: dimension mismatch");
  return 2.0 * avg_gamma - avg_2gamma;
}

CoupledRun run_coupled_rr(const ProblemSpec& problem, const Vector& theta0, double gamma,
                          std::int64_t n, StreamKey key, int record_stride) {
  require(gamma > 0.0, "run_coupled_rr: gamma must be positive");
  require(n >= 1, "run_coupled_rr: n must be positive");
  problem.check_theta(theta0);
  warn_step_size(problem, 2.0 * gamma, "run_coupled_rr (2*gamma chain)");

  CoupledRun out;
  for (ChainRun* run : {&out.run_gamma, &out.run_2gamma}) {
    run->n = n;
    run->theta0 = theta0;
    run->stream = key;
    run->stream_start_counter = 0;
    run->record_stride = record_stride;
    if (record_stride > 0) run->recorded_path.push_back(theta0);
  }
  out.run_gamma.gamma = gamma;
  out.run_2gamma.gamma = 2.0 * gamma;

  NoiseStream stream(key.seed, key.index);
  const int dd = problem.draw_dim();
  Vector theta_g = theta0;
  Vector theta_2g = theta0;
  Vector sum_g = Vector::Zero(problem.dim());
  Vector sum_2g = Vector::Zero(problem.dim());
  for (std::int64_t k = 1; k <= 2 * n; ++k) {
    const Vector draw = stream.next_gaussians(dd);
    theta_g -= gamma * problem.stoch_gradient_from_draw(theta_g, draw);
    theta_2g -= 2.0 * gamma * problem.stoch_gradient_from_draw(theta_2g, draw);
    if (!theta_g.allFinite())
      throw DivergenceError("run_coupled_rr: non-finite iterate in gamma chain",
                            static_cast<std::uint64_t>(k), "gamma");
    if (!theta_2g.allFinite())
      throw DivergenceError("run_coupled_rr: non-finite iterate in 2gamma chain",
                            static_cast<std::uint64_t>(k), "2gamma");
    if (k == n + 1) {
      out.run_gamma.theta_at_n_plus_1 = theta_g;
      out.run_2gamma.theta_at_n_plus_1 = theta_2g;
    }
    if (k >= n + 1) {
      sum_g += theta_g;
      sum_2g += theta_2g;
    }
    if (record_stride > 0 && k % record_stride == 0) {
      out.run_gamma.recorded_path.push_back(theta_g);
      out.run_2gamma.recorded_path.push_back(theta_2g);
    }
  }
  out.run_gamma.theta_at_2n = theta_g;
  out.run_2gamma.theta_at_2n = theta_2g;
  out.run_gamma.tail_average = sum_g / static_cast<double>(n);
  out.run_2gamma.tail_average = sum_2g / static_cast<double>(n);
  out.rr_estimate = rr_combine(out.run_gamma.tail_average, out.run_2gamma.tail_average);
  return out;
}

void run_synchronously_coupled(const ProblemSpec& problem, const Vector& theta0_a,
                               const Vector& theta0_b, double gamma, std::int64_t steps,
                               NoiseStream& stream, const PairObserver& observer) {
  require(gamma > 0.0, "run_synchronously_coupled: gamma must be positive");
  require(steps >= 0, "run_synchronously_coupled: steps must be non-negative");
  problem.check_theta(theta0_a);
  problem.check_theta(theta0_b);
  const int dd = problem.draw_dim();
  Vector a = theta0_a;
  Vector b = theta0_b;
  observer(0, a, b);
  for (std::int64_t k = 1; k <= steps; ++k) {
    const Vector draw = stream.next_gaussians(dd);
    a -= gamma * problem.stoch_gradient_from_draw(a, draw);
    b -= gamma * problem.stoch_gradient_from_draw(b, draw);
    if (!a.allFinite() || !b.allFinite())
      throw DivergenceError("run_synchronously_coupled: non-finite iterate",
                            static_cast<std::uint64_t>(k));
    observer(k, a, b);
  }
}

}  // namespace rrsgd
