#ifndef RRSGD_PROBLEMS_HPP
#define RRSGD_PROBLEMS_HPP

#include <memory>
#include <string>
#include <vector>

#include "rrsgd/common.hpp"
#include "rrsgd/rng.hpp"

namespace rrsgd {

enum class ProblemKind { Quadratic, LogCoshPerturbedQuadratic, LinearRegression };

std::string to_string(ProblemKind kind);

/// Symmetric 3-tensor T with slice(l)(i,j) = T_{ijl}.
class Tensor3 {
 public:
  explicit Tensor3(int dim) : dim_(dim), slices_(dim, Matrix::Zero(dim, dim)) {}

  int dim() const { return dim_; }
  Matrix& slice(int l) { return slices_[l]; }
  const Matrix& slice(int l) const { return slices_[l]; }

  /// Contraction against a matrix: out_l = sum_{i,j} M_ij T_{ijl}.
  Vector contract(const Matrix& m) const;

  /// Contraction against a rank-one square: out_l = sum_{i,j} u_i u_j T_{ijl}.
  Vector contract_outer(const Vector& u) const { return contract(u * u.transpose()); }

  double max_abs() const;

 private:
  int dim_;
  std::vector<Matrix> slices_;
};

/// Monte-Carlo (or exact) estimate of the gradient-noise covariance at the optimum.
struct NoiseCovEstimate {
  Matrix cov;
  double std_err = 0.0;  // largest componentwise standard error; 0 when exact
  bool exact = false;
};

/**
 * A strongly convex test problem with a stochastic gradient oracle.
 *
 * Immutable after construction; safe to share across workers. All
 * stochastic state lives in the NoiseStream passed by the caller. The
 * stochastic gradient is a deterministic function of (theta, draw), so
 * two chains driven by the same draw sequence are synchronously coupled.
 */
class ProblemSpec {
 public:
  virtual ~ProblemSpec() = default;

  ProblemKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Vector& theta_star() const { return theta_star_; }
  /// Strong convexity constant mu.
  double mu() const { return mu_; }
  /// Smoothness / co-coercivity constant L; step sizes should satisfy gamma <= 1/(2L).
  double smoothness() const { return smoothness_; }
  /// Uniform bound on the operator norm of the third derivative.
  double third_derivative_bound() const { return third_bound_; }
  /// Uniform bound on the operator norm of the fourth derivative.
  double fourth_derivative_bound() const { return fourth_bound_; }

  virtual Vector gradient(const Vector& theta) const = 0;

  /// Number of standard normals consumed per stochastic-gradient draw.
  virtual int draw_dim() const = 0;

  /// Stochastic gradient as a deterministic function of the raw draw.
  virtual Vector stoch_gradient_from_draw(const Vector& theta, const Vector& draw) const = 0;

  /// Stochastic gradient consuming exactly one logical draw from the stream.
  Vector stoch_gradient(const Vector& theta, NoiseStream& stream) const {
    check_theta(theta);
    return stoch_gradient_from_draw(theta, stream.next_gaussians(draw_dim()));
  }

  virtual Matrix hessian_at_opt() const = 0;
  virtual Tensor3 third_derivative_at_opt() const = 0;

  /// True when the gradient-noise covariance at the optimum has a closed form.
  virtual bool has_closed_form_noise_cov() const = 0;

  /// Gradient-noise covariance at the optimum: exact when closed form,
  /// otherwise a Monte-Carlo estimate over mc_samples draws.
  NoiseCovEstimate noise_cov_at_opt(long mc_samples,
                                    std::uint64_t seed = kNoiseCovSeed) const;

  /// tau_2 = E^{1/2}||grad F(theta*, xi)||^2 = sqrt(Tr noise_cov).
  double tau2(long mc_samples = 100000) const;

  void check_theta(const Vector& theta) const;

  static constexpr std::uint64_t kNoiseCovSeed = 0x6E6F697365636F76ULL;

 protected:
  ProblemSpec(ProblemKind kind, int dim) : kind_(kind), dim_(dim) {}

  virtual Matrix closed_form_noise_cov() const {
    throw CapabilityError("noise covariance has no closed form for " + to_string(kind_));
  }

  ProblemKind kind_;
  int dim_;
  Vector theta_star_;
  double mu_ = 0.0;
  double smoothness_ = 0.0;
  double third_bound_ = 0.0;
  double fourth_bound_ = 0.0;
};

using ProblemPtr = std::shared_ptr<const ProblemSpec>;

/// f(theta) = (1/2)(theta - theta*)' H (theta - theta*), additive Gaussian noise.
ProblemPtr make_quadratic(const Matrix& hessian, const Vector& theta_star,
                          const Matrix& noise_cov);
/// Convenience: H = h*I, noise sigma^2*I in dimension dim.
ProblemPtr make_quadratic_iso(int dim, double h, double sigma, const Vector& theta_star);

/// f(theta) = (1/2)(theta - q)' H (theta - q) + eps * sum_i log cosh(theta_i - c_i),
/// additive Gaussian noise. The optimum is found by damped Newton at construction.
ProblemPtr make_logcosh(const Matrix& hessian, const Vector& quad_center, double epsilon,
                        const Vector& perturb_centers, const Matrix& noise_cov);

/// f(theta) = (1/2) E[(a'theta - b)^2] with a ~ N(0, M), b = a'theta* + sigma*e.
/// The stochastic gradient a(a'theta - b) has state-dependent (multiplicative) noise.
ProblemPtr make_linear_regression(const Matrix& covariate_cov, const Vector& theta_star,
                                  double label_sigma);

}  // namespace rrsgd

#endif  // RRSGD_PROBLEMS_HPP
