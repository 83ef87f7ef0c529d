#include "rrsgd/theory.hpp"

namespace rrsgd {

Matrix lyapunov_solve(const Matrix& hessian, const Matrix& rhs) {
  require(hessian.rows() == hessian.cols(), "lyapunov_solve: H must be square");
  require(hessian.isApprox(hessian.transpose(), 1e-12), "lyapunov_solve: H must be symmetric");
  require(rhs.rows() == hessian.rows() && rhs.cols() == hessian.cols(),
          "lyapunov_solve: C dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hessian);
  require(es.eigenvalues().minCoeff() > 0.0, "lyapunov_solve: H must be positive definite");
  const Matrix& u = es.eigenvectors();
  const Vector& lam = es.eigenvalues();
  Matrix x_tilde = u.transpose() * rhs * u;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    for (Eigen::Index j = 0; j < lam.size(); ++j) x_tilde(i, j) /= lam[i] + lam[j];
  return u * x_tilde * u.transpose();
}

Vector first_order_bias(const Matrix& hessian, const Tensor3& third_deriv,
                        const Matrix& noise_cov) {
  require(third_deriv.dim() == hessian.rows(), "first_order_bias: tensor dimension mismatch");
  const Matrix tc = lyapunov_solve(hessian, noise_cov);
  return -0.5 * hessian.ldlt().solve(third_deriv.contract(tc));
}

Matrix asymptotic_covariance(const Matrix& hessian, const Matrix& noise_cov) {
  require(hessian.rows() == hessian.cols(), "asymptotic_covariance: H must be square");
  require(noise_cov.rows() == hessian.rows() && noise_cov.cols() == hessian.cols(),
          "asymptotic_covariance: dimension mismatch");
  Eigen::FullPivLU<Matrix> lu(hessian);
  require(lu.isInvertible(), "asymptotic_covariance: H is singular");
  const Matrix h_inv = lu.inverse();
  return h_inv * noise_cov * h_inv;
}

Vector eta_residual(const ProblemSpec& problem, const Vector& theta) {
  problem.check_theta(theta);
  return problem.gradient(theta) - problem.hessian_at_opt() * (theta - problem.theta_star());
}

Vector psi_quadratic_term(const ProblemSpec& problem, const Vector& theta) {
  problem.check_theta(theta);
  return 0.5 * problem.third_derivative_at_opt().contract_outer(theta - problem.theta_star());
}

TheoryReport theory_report(const ProblemSpec& problem, long mc_samples) {
  TheoryReport report;
  report.hessian = problem.hessian_at_opt();
  const NoiseCovEstimate noise = problem.noise_cov_at_opt(mc_samples);
  report.noise_cov = noise.cov;
  report.noise_cov_exact = noise.exact;
  report.noise_cov_std_err = noise.std_err;
  report.trace_noise_cov = noise.cov.trace();
  report.asymptotic_cov = asymptotic_covariance(report.hessian, report.noise_cov);
  report.tc_matrix = lyapunov_solve(report.hessian, report.noise_cov);
  report.delta1 = first_order_bias(report.hessian, problem.third_derivative_at_opt(),
                                   report.noise_cov);
  return report;
}

}  // namespace rrsgd
