#include <doctest.h>

#include <cmath>
#include <random>

#include "rrsgd/diagnostics.hpp"
#include "rrsgd/theory.hpp"
#include "test_support.hpp"

using namespace rrsgd;
namespace rt = rrsgd::testing;

TEST_CASE("mixing block length") {
  CHECK(mixing_block_length(0.1, 1.0) == 28);  // ceil(2 log 4 / 0.1) = ceil(27.726)
  CHECK(mixing_block_length(0.01, 1.0) == 278);
  CHECK_THROWS_AS(mixing_block_length(0.0, 1.0), ArgumentError);
}

TEST_CASE("cost function c") {
  const Vector star = Vector::Zero(1);
  CHECK(cost_function_c(Vector::Constant(1, 0.7), Vector::Constant(1, 0.7), star, 0.1, 1.0, 1.0) ==
        0.0);
  // 1d: theta=1, theta'=0, gamma=0.25, mu=1, tau2=1 -> 1 + sqrt 2.
  const double v = cost_function_c(Vector::Constant(1, 1.0), Vector::Zero(1), star, 0.25, 1.0, 1.0);
  CHECK(v == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-14));
  // Symmetry.
  std::mt19937 rng(3);
  const Vector a = rt::random_vector(3, rng);
  const Vector b = rt::random_vector(3, rng);
  const Vector s3 = rt::random_vector(3, rng);
  CHECK(cost_function_c(a, b, s3, 0.1, 2.0, 0.5) == cost_function_c(b, a, s3, 0.1, 2.0, 0.5));
}

TEST_CASE("coupling curve is identically zero for equal starts") {
  const auto problem = make_quadratic_iso(2, 1.0, 1.0, Vector::Zero(2));
  const Vector start = Vector::Constant(2, 0.5);
  const DecayCurve curve = coupling_contraction_curve(*problem, 0.1, start, start, 20, 50, 7);
  for (const double v : curve.values) CHECK(v == 0.0);
}

TEST_CASE("zero-noise quadratic: c decays by the squared contraction factor per step") {
  // With tau2 = 0 and both radii contracting by (1 - gamma h), the c value
  // contracts by (1 - gamma h)^2 = 1/4 per step at gamma = 0.5.
  const auto problem = make_quadratic_iso(1, 1.0, 0.0, Vector::Zero(1));
  const DecayCurve curve = coupling_contraction_curve(
      *problem, 0.5, Vector::Constant(1, 1.0), Vector::Constant(1, -0.5), 8, 3, 0);
  for (std::size_t k = 0; k + 1 < curve.values.size(); ++k) {
    CHECK(curve.values[k + 1] == doctest::Approx(0.25 * curve.values[k]).epsilon(1e-12));
    CHECK(curve.std_errs[k] == doctest::Approx(0.0));
  }
}

TEST_CASE("synchronous coupling difference on quadratics is exactly (I - gamma H)^k d0") {
  std::mt19937 rng(21);
  const Matrix h = rt::random_spd(3, rng, 0.5, 2.0);
  const auto problem = make_quadratic(h, rt::random_vector(3, rng), rt::random_spd(3, rng));
  const double gamma = 0.1;
  const Vector a0 = rt::random_vector(3, rng);
  const Vector b0 = rt::random_vector(3, rng);
  const Matrix step = Matrix::Identity(3, 3) - gamma * h;
  NoiseStream stream(42, 0);
  Vector expected = a0 - b0;
  run_synchronously_coupled(*problem, a0, b0, gamma, 50, stream,
                            [&](std::int64_t k, const Vector& a, const Vector& b) {
                              if (k > 0) expected = step * expected;
                              CHECK((a - b - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
                            });
}

TEST_CASE("coupling curve decay rate on the noisy quadratic beats sqrt(1 - gamma mu)") {
  const auto problem = make_quadratic_iso(1, 1.0, 1.0, Vector::Zero(1));
  const double gamma = 0.1;
  const DecayCurve curve = coupling_contraction_curve(
      *problem, gamma, Vector::Constant(1, 2.0), Vector::Constant(1, -2.0), 40, 1000, 11);
  const std::size_t m = curve.values.size() - 1;
  const double rate = std::pow(curve.values[m] / curve.values[0], 1.0 / static_cast<double>(m));
  const double margin = 3.0 * rate *
                        (curve.std_errs[m] / curve.values[m] + curve.std_errs[0] /
                         std::max(curve.values[0], 1e-300)) /
                        static_cast<double>(m);
  CHECK(rate <= std::sqrt(1.0 - gamma * problem->mu()) + margin);
}

TEST_CASE("coupling curve is monotone non-increasing within 3 standard errors") {
  std::mt19937 rng(13);
  std::vector<ProblemPtr> problems = {
      make_quadratic_iso(2, 1.0, 1.0, Vector::Zero(2)),
      make_logcosh(Matrix::Identity(2, 2), Vector::Zero(2), 0.5, Vector::Constant(2, 0.3),
                   Matrix::Identity(2, 2)),
      make_linear_regression(Matrix::Identity(2, 2), Vector::Zero(2), 0.5),
  };
  for (const auto& problem : problems) {
    const double gamma = 0.4 / (2.0 * problem->smoothness());
    const DecayCurve curve = coupling_contraction_curve(
        *problem, gamma, problem->theta_star() + Vector::Constant(2, 1.0),
        problem->theta_star() - Vector::Constant(2, 1.0), 30, 500, 3);
    for (std::size_t k = 0; k + 1 < curve.values.size(); ++k) {
      CHECK(curve.values[k + 1] <=
            curve.values[k] + 3.0 * (curve.std_errs[k + 1] + curve.std_errs[k]));
    }
    // DecayCurve invariants.
    CHECK(curve.m_gamma == mixing_block_length(gamma, problem->mu()));
    for (std::size_t k = 0; k + 1 < curve.ks.size(); ++k) CHECK(curve.ks[k] < curve.ks[k + 1]);
  }
}

TEST_CASE("stationary moment estimate: zero-noise chain stays at zero") {
  const auto problem = make_quadratic_iso(1, 1.0, 0.0, Vector::Zero(1));
  const MomentEstimate est = stationary_moment_estimate(*problem, 0.1, 2, 0, 10000, 5);
  CHECK(est.estimate == 0.0);
}

TEST_CASE("stationary second moment matches the AR(1) closed form") {
  const auto problem = make_quadratic_iso(1, 1.0, 1.0, Vector::Zero(1));
  const double gamma = 0.1;
  const MomentEstimate est = stationary_moment_estimate(*problem, gamma, 2, 0, 1000000, 5);
  const double exact = gamma / (2.0 - gamma);  // gamma sigma^2 / (h (2 - gamma h))
  CHECK(std::abs(est.estimate - exact) / exact < 0.05);
  CHECK(est.std_err > 0.0);
  CHECK(std::abs(est.estimate - exact) <= 5.0 * est.std_err);
}

TEST_CASE("stationary second moment scales linearly with gamma") {
  const auto problem = make_quadratic_iso(1, 1.0, 1.0, Vector::Zero(1));
  double previous = 0.0;
  std::vector<double> ratios;
  for (const double gamma : {0.04, 0.02, 0.01}) {
    const MomentEstimate est = stationary_moment_estimate(*problem, gamma, 2, 0, 400000, 9);
    ratios.push_back(est.estimate / gamma);
    previous = est.estimate;
  }
  (void)previous;
  for (const double r : ratios) {
    CHECK(r <= 2.0 * ratios.front());
    CHECK(r >= 0.5 * ratios.front());
  }
}

TEST_CASE("stationary moment estimate validates its inputs") {
  const auto problem = make_quadratic_iso(1, 1.0, 1.0, Vector::Zero(1));
  CHECK_THROWS_AS(stationary_moment_estimate(*problem, 0.1, 3, 0, 1000, 0), ArgumentError);
  CHECK_THROWS_AS(stationary_moment_estimate(*problem, 0.1, 2, 5, 1000, 0), ArgumentError);
  CHECK_THROWS_AS(stationary_moment_estimate(*problem, 0.1, 2, 0, 10, 0), ArgumentError);
}

TEST_CASE("fit_rate_exponent on exact power laws") {
  const RateFit inverse = fit_rate_exponent({{10.0, 0.1}, {100.0, 0.01}, {1000.0, 0.001}});
  CHECK(inverse.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(inverse.r_squared == doctest::Approx(1.0).epsilon(1e-12));

  const RateFit constant = fit_rate_exponent({{1.0, 2.0}, {10.0, 2.0}, {100.0, 2.0}});
  CHECK(constant.slope == doctest::Approx(0.0));
}

TEST_CASE("fit_rate_exponent recovers a noisy -0.75 slope") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> noise(-0.02, 0.02);
  std::vector<std::pair<double, double>> points;
  for (int i = 0; i < 8; ++i) {
    const double x = std::pow(10.0, 1.0 + 0.4 * i);
    points.emplace_back(x, 3.0 * std::pow(x, -0.75) * (1.0 + noise(rng)));
  }
  const RateFit fit = fit_rate_exponent(points);
  CHECK(std::abs(fit.slope + 0.75) < 0.03);
}

TEST_CASE("fit_rate_exponent is scale equivariant in y") {
  std::vector<std::pair<double, double>> points = {
      {10.0, 0.5}, {100.0, 0.11}, {1000.0, 0.021}, {10000.0, 0.0049}};
  const RateFit base = fit_rate_exponent(points);
  for (auto& [x, y] : points) y *= 7.25;
  const RateFit scaled = fit_rate_exponent(points);
  CHECK(std::abs(base.slope - scaled.slope) <= 1e-12);
  CHECK(scaled.intercept != base.intercept);
}

TEST_CASE("fit_rate_exponent rejects bad input") {
  CHECK_THROWS_AS(fit_rate_exponent({{1.0, 1.0}, {2.0, 2.0}}), ArgumentError);
  CHECK_THROWS_AS(fit_rate_exponent({{1.0, 1.0}, {2.0, -2.0}, {3.0, 1.0}}), ArgumentError);
  CHECK_THROWS_AS(fit_rate_exponent({{1.0, 1.0}, {0.0, 2.0}, {3.0, 1.0}}), ArgumentError);
}

TEST_CASE("decomposition audit reconstructs the tail-average identity") {
  SUBCASE("noisy quadratic: residual is floating-point only") {
    const auto problem = make_quadratic_iso(2, 1.5, 1.0, Vector::Zero(2));
    NoiseStream stream(404, 2);
    const ChainRun run =
        run_tail_averaged(*problem, Vector::Constant(2, 1.0), 0.05, 1000, stream, 1);
    const AuditResult audit = decomposition_audit(*problem, run);
    CHECK(audit.relative() <= 1e-11);
  }
  SUBCASE("zero-noise quadratic: residual at machine epsilon") {
    const auto problem = make_quadratic_iso(1, 1.0, 0.0, Vector::Zero(1));
    NoiseStream stream(0, 0);
    const ChainRun run =
        run_tail_averaged(*problem, Vector::Constant(1, 1.0), 0.25, 200, stream, 1);
    const AuditResult audit = decomposition_audit(*problem, run);
    CHECK(audit.relative() <= 1e-12);
  }
  SUBCASE("logcosh with the eta term included: machine precision") {
    const auto problem = make_logcosh(Matrix::Identity(1, 1), Vector::Zero(1), 0.5,
                                      Vector::Constant(1, 0.5), Matrix::Identity(1, 1));
    NoiseStream stream(505, 1);
    const ChainRun run =
        run_tail_averaged(*problem, Vector::Constant(1, 1.0), 0.05, 1000, stream, 1);
    const AuditResult audit = decomposition_audit(*problem, run);
    CHECK(audit.relative() <= 1e-11);
  }
  SUBCASE("missing path raises") {
    const auto problem = make_quadratic_iso(1, 1.0, 1.0, Vector::Zero(1));
    NoiseStream stream(1, 0);
    const ChainRun run = run_tail_averaged(*problem, Vector::Constant(1, 1.0), 0.1, 50, stream);
    CHECK_THROWS_AS(decomposition_audit(*problem, run), ArgumentError);
  }
}
