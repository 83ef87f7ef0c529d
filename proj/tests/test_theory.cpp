#include <doctest.h>

#include <cmath>
#include <random>

#include "rrsgd/chains.hpp"
#include "rrsgd/diagnostics.hpp"
#include "rrsgd/theory.hpp"
#include "test_support.hpp"

using namespace rrsgd;
namespace rt = rrsgd::testing;

TEST_CASE("lyapunov solve: identity hessian halves the right-hand side") {
  std::mt19937 rng(3);
  const Matrix c = rt::random_symmetric(4, rng);
  const Matrix x = lyapunov_solve(Matrix::Identity(4, 4), c);
  CHECK((x - 0.5 * c).norm() < 1e-14);
}

TEST_CASE("lyapunov solve: scalar case") {
  const Matrix h = 2.5 * Matrix::Identity(1, 1);
  const Matrix c = 3.0 * Matrix::Identity(1, 1);
  CHECK(lyapunov_solve(h, c)(0, 0) == doctest::Approx(3.0 / 5.0).epsilon(1e-14));
}

TEST_CASE("lyapunov solve agrees with the dense Kronecker oracle") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + static_cast<int>(rng() % 7);
    const Matrix h = rt::random_spd(d, rng);
    const Matrix c = rt::random_symmetric(d, rng);
    const Matrix x = lyapunov_solve(h, c);
    const Matrix oracle = rt::kron_lyapunov_solve(h, c);
    CHECK((x - oracle).norm() / std::max(1e-30, oracle.norm()) < 1e-10);
    // Residual of the defining equation.
    CHECK((h * x + x * h - c).norm() / c.norm() < 1e-10);
  }
}

TEST_CASE("lyapunov solve rejects non-SPD input") {
  CHECK_THROWS_AS(lyapunov_solve(-Matrix::Identity(2, 2), Matrix::Identity(2, 2)), ArgumentError);
  Matrix asym(2, 2);
  asym << 1.0, 1.0, 0.0, 1.0;
  CHECK_THROWS_AS(lyapunov_solve(asym, Matrix::Identity(2, 2)), ArgumentError);
  CHECK_THROWS_AS(lyapunov_solve(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), ArgumentError);
}

TEST_CASE("first-order bias: zero tensor and quadratic problems give zero") {
  const Tensor3 zero(3);
  std::mt19937 rng(5);
  const Matrix h = rt::random_spd(3, rng);
  const Matrix c = rt::random_spd(3, rng, 0.1, 1.0);
  CHECK(first_order_bias(h, zero, c).norm() == 0.0);

  const auto quad = make_quadratic(h, Vector::Zero(3), c);
  const TheoryReport report = theory_report(*quad);
  CHECK(report.delta1.norm() == 0.0);
}

TEST_CASE("first-order bias: 1d closed form -s c / (4 h^2)") {
  const double s = 0.7, h = 1.3, c = 2.0;
  Tensor3 t(1);
  t.slice(0)(0, 0) = s;
  const Vector delta1 = first_order_bias(h * Matrix::Identity(1, 1), t, c * Matrix::Identity(1, 1));
  CHECK(delta1[0] == doctest::Approx(-s * c / (4.0 * h * h)).epsilon(1e-13));
}

TEST_CASE("first-order bias cross-checked against long-run stationary simulation") {
  // Shifted logcosh instance with a nonzero third derivative at the optimum.
  const auto problem = make_logcosh(Matrix::Identity(1, 1), Vector::Zero(1), 0.5,
                                    Vector::Constant(1, 0.5), Matrix::Identity(1, 1));
  const TheoryReport report = theory_report(*problem);
  const double delta1 = report.delta1[0];
  REQUIRE(std::abs(delta1) > 1e-3);

  // Oracle: stationary mean of the chain at shrinking gamma; the scaled bias
  // (mean - theta*)/gamma is delta1 + O(sqrt(gamma)), removed by
  // extrapolating the two gammas with sqrt(gamma_big) = 2 sqrt(gamma_small).
  const double gammas[2] = {0.04, 0.01};
  double scaled[2];
  double ses[2];
  for (int i = 0; i < 2; ++i) {
    const double gamma = gammas[i];
    const std::int64_t burn_in = 20 * mixing_block_length(gamma, problem->mu());
    const std::int64_t samples = 40000000;
    NoiseStream stream(911 + i, 0);
    Vector theta = problem->theta_star();
    for (std::int64_t k = 0; k < burn_in; ++k)
      theta -= gamma * problem->stoch_gradient_from_draw(theta, stream.next_gaussians(1));
    double sum = 0.0;
    const std::int64_t batch = samples / 30;
    std::vector<double> batch_means(30, 0.0);
    for (std::int64_t k = 0; k < batch * 30; ++k) {
      theta -= gamma * problem->stoch_gradient_from_draw(theta, stream.next_gaussians(1));
      sum += theta[0];
      batch_means[static_cast<std::size_t>(k / batch)] += theta[0];
    }
    const double mean = sum / static_cast<double>(batch * 30);
    double ss = 0.0;
    for (auto& b : batch_means) {
      b /= static_cast<double>(batch);
      ss += (b - mean) * (b - mean);
    }
    const double se_mean = std::sqrt(ss / 29.0 / 30.0);
    scaled[i] = (mean - problem->theta_star()[0]) / gamma;
    ses[i] = se_mean / gamma;
  }
  const double extrapolated = 2.0 * scaled[1] - scaled[0];
  const double se = std::sqrt(4.0 * ses[1] * ses[1] + ses[0] * ses[0]);
  CHECK(std::abs(extrapolated - delta1) <= 4.0 * se + 0.1 * std::abs(delta1));
}

TEST_CASE("asymptotic covariance closed forms") {
  std::mt19937 rng(9);
  const Matrix c = rt::random_spd(3, rng, 0.2, 2.0);
  CHECK((asymptotic_covariance(Matrix::Identity(3, 3), c) - c).norm() < 1e-14);
  const Matrix one_d = asymptotic_covariance(2.0 * Matrix::Identity(1, 1),
                                             4.0 * Matrix::Identity(1, 1));
  CHECK(one_d(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("eta residual") {
  const auto quad = make_quadratic_iso(2, 2.0, 1.0, Vector::Zero(2));
  Vector theta(2);
  theta << 0.7, -0.2;
  CHECK(eta_residual(*quad, theta).norm() == 0.0);

  const auto lc = make_logcosh(Matrix::Identity(1, 1), Vector::Zero(1), 0.5,
                               Vector::Zero(1), Matrix::Identity(1, 1));
  CHECK(eta_residual(*lc, lc->theta_star()).norm() <= 1e-13);
  const double expected = 0.5 * (std::tanh(0.3) - 0.3);
  CHECK(eta_residual(*lc, Vector::Constant(1, 0.3))[0] ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("psi quadratic term") {
  const auto quad = make_quadratic_iso(2, 1.0, 1.0, Vector::Zero(2));
  CHECK(psi_quadratic_term(*quad, Vector::Constant(2, 0.4)).norm() == 0.0);

  const auto lc = make_logcosh(Matrix::Identity(1, 1), Vector::Zero(1), 0.5,
                               Vector::Constant(1, 0.5), Matrix::Identity(1, 1));
  const double s = lc->third_derivative_at_opt().slice(0)(0, 0);
  const double u = 0.3;
  const Vector theta = lc->theta_star() + Vector::Constant(1, u);
  CHECK(psi_quadratic_term(*lc, theta)[0] == doctest::Approx(s * u * u / 2.0).epsilon(1e-12));
  CHECK(psi_quadratic_term(*lc, lc->theta_star()).norm() == 0.0);
}

TEST_CASE("taylor residual ordering: ||eta - psi|| <= (L4/6) ||theta - theta*||^3") {
  std::mt19937 rng(31);
  const auto lc = make_logcosh(rt::random_spd(2, rng, 0.8, 2.0), rt::random_vector(2, rng), 0.6,
                               rt::random_vector(2, rng), Matrix::Identity(2, 2));
  const double k_bound = lc->fourth_derivative_bound() / 6.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector theta = lc->theta_star() + rt::random_vector(2, rng, 0.5);
    const double lhs = (eta_residual(*lc, theta) - psi_quadratic_term(*lc, theta)).norm();
    const double r = (theta - lc->theta_star()).norm();
    CHECK(lhs <= k_bound * r * r * r + 1e-12);
  }
}

TEST_CASE("theory report invariants") {
  std::mt19937 rng(41);
  const Matrix h = rt::random_spd(3, rng);
  const Matrix noise = rt::random_spd(3, rng, 0.2, 1.5);
  const auto quad = make_quadratic(h, rt::random_vector(3, rng), noise);
  const TheoryReport report = theory_report(*quad);

  const Matrix residual = report.hessian * report.tc_matrix + report.tc_matrix * report.hessian -
                          report.noise_cov;
  CHECK(residual.norm() / report.noise_cov.norm() <= 1e-10);
  CHECK((report.tc_matrix - report.tc_matrix.transpose()).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> es(report.tc_matrix);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  CHECK(report.trace_noise_cov == doctest::Approx(noise.trace()).epsilon(1e-14));
  CHECK(report.noise_cov_exact);
}

TEST_CASE("empirical tail-average variance matches the asymptotic covariance") {
  // n Var(tail average) -> Sigma_inf = sigma^2/h^2 for the 1d quadratic.
  const double h = 1.0, sigma = 1.0, gamma = 0.01;
  const std::int64_t n = 100000;
  const auto problem = make_quadratic_iso(1, h, sigma, Vector::Zero(1));
  const std::int64_t reps = 1000;
  double sum = 0.0, sum_sq = 0.0;
  for (std::int64_t r = 0; r < reps; ++r) {
    NoiseStream stream(777, static_cast<std::uint64_t>(r));
    const ChainRun run = run_tail_averaged(*problem, Vector::Zero(1), gamma, n, stream);
    sum += run.tail_average[0];
    sum_sq += run.tail_average[0] * run.tail_average[0];
  }
  const double mean = sum / static_cast<double>(reps);
  const double var = sum_sq / static_cast<double>(reps) - mean * mean;
  const Matrix sigma_inf = asymptotic_covariance(h * Matrix::Identity(1, 1),
                                                 sigma * sigma * Matrix::Identity(1, 1));
  CHECK(static_cast<double>(n) * var ==
        doctest::Approx(sigma_inf(0, 0)).epsilon(0.15));
}
