#include "rrsgd/problems.hpp"

#include <cmath>

namespace rrsgd {

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Quadratic:
      return "quadratic";
    case ProblemKind::LogCoshPerturbedQuadratic:
      return "logcosh";
    case ProblemKind::LinearRegression:
      return "linear_regression";
  }
  return "unknown";
}

Vector Tensor3::contract(const Matrix& m) const {
  require(m.rows() == dim_ && m.cols() == dim_, "Tensor3::contract: dimension mismatch");
  Vector out(dim_);
  for (int l = 0; l < dim_; ++l) out[l] = slices_[l].cwiseProduct(m).sum();
  return out;
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (const auto& s : slices_) m = std::max(m, s.cwiseAbs().maxCoeff());
  return m;
}

void ProblemSpec::check_theta(const Vector& theta) const {
  if (theta.size() != dim_)
    throw ArgumentError("theta has dimension " + std::to_string(theta.size()) + ", expected " +
                        std::to_string(dim_));
  if (!theta.allFinite()) throw ArgumentError("theta has non-finite components");
}

NoiseCovEstimate ProblemSpec::noise_cov_at_opt(long mc_samples, std::uint64_t seed) const {
  if (has_closed_form_noise_cov()) {
    return NoiseCovEstimate{closed_form_noise_cov(), 0.0, true};
  }
  require(mc_samples >= 1, "noise_cov_at_opt: mc_samples must be >= 1");
  NoiseStream stream(seed, 0);
  Matrix sum = Matrix::Zero(dim_, dim_);
  Matrix sum_sq = Matrix::Zero(dim_, dim_);
  for (long i = 0; i < mc_samples; ++i) {
    const Vector g = stoch_gradient_from_draw(theta_star_, stream.next_gaussians(draw_dim()));
    const Matrix outer = g * g.transpose();
    sum += outer;
    sum_sq += outer.cwiseProduct(outer);
  }
  const double inv_n = 1.0 / static_cast<double>(mc_samples);
  Matrix mean = sum * inv_n;
  double max_se = 0.0;
  if (mc_samples >= 2) {
    const Matrix var = (sum_sq * inv_n - mean.cwiseProduct(mean)).cwiseMax(0.0);
    max_se = std::sqrt(var.maxCoeff() / static_cast<double>(mc_samples - 1));
  }
  return NoiseCovEstimate{std::move(mean), max_se, false};
}

double ProblemSpec::tau2(long mc_samples) const {
  return std::sqrt(noise_cov_at_opt(mc_samples).cov.trace());
}

namespace {

void check_spd(const Matrix& h, const char* what) {
  require(h.rows() == h.cols(), std::string(what) + " must be square");
  require(h.isApprox(h.transpose(), 1e-12), std::string(what) + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  require(es.eigenvalues().minCoeff() > 0.0, std::string(what) + " must be positive definite");
}

// PSD square root factor via eigendecomposition; tolerates singular matrices
// (e.g. the zero noise covariance), unlike a plain Cholesky.
Matrix psd_sqrt_factor(const Matrix& cov, const char* what) {
  require(cov.rows() == cov.cols(), std::string(what) + " must be square");
  require(cov.isApprox(cov.transpose(), 1e-12), std::string(what) + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const double floor = -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  require(es.eigenvalues().minCoeff() >= floor, std::string(what) + " must be PSD");
  return es.eigenvectors() *
         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

class QuadraticProblem final : public ProblemSpec {
 public:
  QuadraticProblem(const Matrix& hessian, const Vector& theta_star, const Matrix& noise_cov)
      : ProblemSpec(ProblemKind::Quadratic, static_cast<int>(hessian.rows())),
        hessian_(hessian),
        noise_cov_(noise_cov),
        noise_factor_(psd_sqrt_factor(noise_cov, "noise covariance")) {
    check_spd(hessian, "hessian");
    require(theta_star.size() == dim_, "theta_star dimension mismatch");
    require(noise_cov.rows() == dim_, "noise covariance dimension mismatch");
    theta_star_ = theta_star;
    Eigen::SelfAdjointEigenSolver<Matrix> es(hessian);
    mu_ = es.eigenvalues().minCoeff();
    smoothness_ = es.eigenvalues().maxCoeff();
  }

  Vector gradient(const Vector& theta) const override {
    check_theta(theta);
    return hessian_ * (theta - theta_star_);
  }

  int draw_dim() const override { return dim_; }

  Vector stoch_gradient_from_draw(const Vector& theta, const Vector& draw) const override {
    return hessian_ * (theta - theta_star_) + noise_factor_ * draw;
  }

  Matrix hessian_at_opt() const override { return hessian_; }
  Tensor3 third_derivative_at_opt() const override { return Tensor3(dim_); }
  bool has_closed_form_noise_cov() const override { return true; }

 protected:
  Matrix closed_form_noise_cov() const override { return noise_cov_; }

 private:
  Matrix hessian_;
  Matrix noise_cov_;
  Matrix noise_factor_;
};

class LogCoshProblem final : public ProblemSpec {
 public:
  LogCoshProblem(const Matrix& hessian, const Vector& quad_center, double epsilon,
                 const Vector& perturb_centers, const Matrix& noise_cov)
      : ProblemSpec(ProblemKind::LogCoshPerturbedQuadratic, static_cast<int>(hessian.rows())),
        hessian_(hessian),
        quad_center_(quad_center),
        epsilon_(epsilon),
        centers_(perturb_centers),
        noise_cov_(noise_cov),
        noise_factor_(psd_sqrt_factor(noise_cov, "noise covariance")) {
    check_spd(hessian, "hessian");
    require(epsilon >= 0.0, "epsilon must be non-negative");
    require(quad_center.size() == dim_, "quad_center dimension mismatch");
    require(perturb_centers.size() == dim_, "perturb_centers dimension mismatch");
    require(noise_cov.rows() == dim_, "noise covariance dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Matrix> es(hessian);
    mu_ = es.eigenvalues().minCoeff();
    smoothness_ = es.eigenvalues().maxCoeff() + epsilon;
    // max |d^3/dx^3 log cosh| = 4/(3 sqrt 3), max |d^4/dx^4 log cosh| = 2
    third_bound_ = epsilon * 4.0 / (3.0 * std::sqrt(3.0));
    fourth_bound_ = 2.0 * epsilon;
    theta_star_ = solve_optimum();
  }

  Vector gradient_at(const Vector& theta) const {
    return hessian_ * (theta - quad_center_) +
           epsilon_ * (theta - centers_).array().tanh().matrix();
  }

  Vector gradient(const Vector& theta) const override {
    check_theta(theta);
    return gradient_at(theta);
  }

  Matrix hessian_at(const Vector& theta) const {
    const Vector sech2 =
        (theta - centers_).array().cosh().square().inverse().matrix();
    return hessian_ + epsilon_ * Matrix(sech2.asDiagonal());
  }

  int draw_dim() const override { return dim_; }

  Vector stoch_gradient_from_draw(const Vector& theta, const Vector& draw) const override {
    return gradient_at(theta) + noise_factor_ * draw;
  }

  Matrix hessian_at_opt() const override { return hessian_at(theta_star_); }

  Tensor3 third_derivative_at_opt() const override {
    Tensor3 t(dim_);
    for (int i = 0; i < dim_; ++i) {
      const double x = theta_star_[i] - centers_[i];
      const double th = std::tanh(x);
      const double sech2 = 1.0 - th * th;
      t.slice(i)(i, i) = -2.0 * epsilon_ * sech2 * th;
    }
    return t;
  }

  bool has_closed_form_noise_cov() const override { return true; }

 protected:
  Matrix closed_form_noise_cov() const override { return noise_cov_; }

 private:
  // Damped Newton; gradient is Lipschitz and the Hessian is >= hessian_ > 0,
  // so full steps converge from the quadratic center in a handful of iterations.
  Vector solve_optimum() const {
    Vector theta = quad_center_;
    constexpr double tol = 1e-13;
    for (int iter = 0; iter < 200; ++iter) {
      const Vector g = gradient_at(theta);
      if (g.norm() <= tol) return theta;
      const Vector step = hessian_at(theta).ldlt().solve(g);
      double damping = 1.0;
      while (damping > 1e-8 && gradient_at(theta - damping * step).norm() >= g.norm()) {
        damping *= 0.5;
      }
      theta -= damping * step;
    }
    if (gradient_at(theta).norm() > tol)
      throw ArgumentError("logcosh optimum: Newton failed to reach gradient tolerance");
    return theta;
  }

  Matrix hessian_;
  Vector quad_center_;
  double epsilon_;
  Vector centers_;
  Matrix noise_cov_;
  Matrix noise_factor_;
};

class LinearRegressionProblem final : public ProblemSpec {
 public:
  LinearRegressionProblem(const Matrix& covariate_cov, const Vector& theta_star,
                          double label_sigma)
      : ProblemSpec(ProblemKind::LinearRegression, static_cast<int>(covariate_cov.rows())),
        covariate_cov_(covariate_cov),
        covariate_factor_(psd_sqrt_factor(covariate_cov, "covariate covariance")),
        label_sigma_(label_sigma) {
    check_spd(covariate_cov, "covariate covariance");
    require(theta_star.size() == dim_, "theta_star dimension mismatch");
    require(label_sigma >= 0.0, "label_sigma must be non-negative");
    theta_star_ = theta_star;
    Eigen::SelfAdjointEigenSolver<Matrix> es(covariate_cov);
    mu_ = es.eigenvalues().minCoeff();
    // Co-coercivity constant of the stochastic gradients for Gaussian a:
    // E||a a'(d)||^2 = d'(2M^2 + M tr M)d, so L1 = 2 lambda_max + tr M.
    smoothness_ = 2.0 * es.eigenvalues().maxCoeff() + covariate_cov.trace();
  }

  Vector gradient(const Vector& theta) const override {
    check_theta(theta);
    return covariate_cov_ * (theta - theta_star_);
  }

  int draw_dim() const override { return dim_ + 1; }

  Vector stoch_gradient_from_draw(const Vector& theta, const Vector& draw) const override {
    const Vector a = covariate_factor_ * draw.head(dim_);
    const double b = a.dot(theta_star_) + label_sigma_ * draw[dim_];
    return a * (a.dot(theta) - b);
  }

  Matrix hessian_at_opt() const override { return covariate_cov_; }
  Tensor3 third_derivative_at_opt() const override { return Tensor3(dim_); }
  bool has_closed_form_noise_cov() const override { return false; }

 private:
  Matrix covariate_cov_;
  Matrix covariate_factor_;
  double label_sigma_;
};

}  // namespace

ProblemPtr make_quadratic(const Matrix& hessian, const Vector& theta_star,
                          const Matrix& noise_cov) {
  return std::make_shared<QuadraticProblem>(hessian, theta_star, noise_cov);
}

ProblemPtr make_quadratic_iso(int dim, double h, double sigma, const Vector& theta_star) {
  require(dim >= 1, "dim must be positive");
  return make_quadratic(h * Matrix::Identity(dim, dim), theta_star,
                        sigma * sigma * Matrix::Identity(dim, dim));
}

ProblemPtr make_logcosh(const Matrix& hessian, const Vector& quad_center, double epsilon,
                        const Vector& perturb_centers, const Matrix& noise_cov) {
  return std::make_shared<LogCoshProblem>(hessian, quad_center, epsilon, perturb_centers,
                                          noise_cov);
}

ProblemPtr make_linear_regression(const Matrix& covariate_cov, const Vector& theta_star,
                                  double label_sigma) {
  return std::make_shared<LinearRegressionProblem>(covariate_cov, theta_star, label_sigma);
}

}  // namespace rrsgd
