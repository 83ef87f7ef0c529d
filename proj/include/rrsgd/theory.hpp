#ifndef RRSGD_THEORY_HPP
#define RRSGD_THEORY_HPP

#include "rrsgd/problems.hpp"

namespace rrsgd {

/// Closed-form asymptotic quantities of a problem at its optimum.
struct TheoryReport {
  Matrix hessian;          // H* = Hessian at the optimum
  Matrix noise_cov;        // gradient-noise covariance at the optimum
  Matrix asymptotic_cov;   // H*^-1 noise_cov H*^-1
  Matrix tc_matrix;        // X with H*X + XH* = noise_cov (stationary covariance slope)
  Vector delta1;           // first-order stationary bias coefficient
  double trace_noise_cov = 0.0;
  bool noise_cov_exact = true;
  double noise_cov_std_err = 0.0;
};

/// Unique X with HX + XH = C, solved in H's eigenbasis. H must be SPD.
Matrix lyapunov_solve(const Matrix& hessian, const Matrix& rhs);

/// First-order stationary bias coefficient:
/// delta1 = -(1/2) H^-1 [third_deriv applied to lyapunov_solve(H, C)],
/// so that the stationary mean satisfies E[theta] - theta* = gamma*delta1 + O(gamma^{3/2}).
Vector first_order_bias(const Matrix& hessian, const Tensor3& third_deriv, const Matrix& noise_cov);

/// H^-1 noise_cov H^-1, the asymptotic covariance of the tail-averaged iterates.
Matrix asymptotic_covariance(const Matrix& hessian, const Matrix& noise_cov);

/// eta(theta) = grad f(theta) - H* (theta - theta*); identically zero for quadratics.
Vector eta_residual(const ProblemSpec& problem, const Vector& theta);

/// psi(theta) = (1/2) third_deriv (theta - theta*)^{x2}, the quadratic Taylor term of eta.
Vector psi_quadratic_term(const ProblemSpec& problem, const Vector& theta);

/// Assemble the full report; mc_samples is used only when the noise covariance
/// has no closed form.
TheoryReport theory_report(const ProblemSpec& problem, long mc_samples = 200000);

}  // namespace rrsgd

#endif  // RRSGD_THEORY_HPP
