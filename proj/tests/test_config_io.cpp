#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rrsgd/config.hpp"
#include "rrsgd/io.hpp"
#include "test_support.hpp"

using namespace rrsgd;
namespace rt = rrsgd::testing;

namespace {

const char* kSampleConfig = R"(# sample experiment
[problem]
kind = quadratic
dim = 2
hessian = 1, 0; 0, 2
theta_star = 0.5, -0.5
noise_sigma = 1.0

[estimator]
estimators = pr, rr
p_moments = 2, 4
theta0 = offset:1

[grid]
n_grid = 100, 200
gammas = 0.05, 0.025
replications = 8
master_seed = 42
)";

}  // namespace

TEST_CASE("config parsing and typed getters") {
  const Config config = Config::parse_text(kSampleConfig);
  CHECK(config.get_string("problem", "kind") == "quadratic");
  CHECK(config.get_int("problem", "dim") == 2);
  const Matrix h = config.get_matrix("problem", "hessian");
  CHECK(h(1, 1) == 2.0);
  const Vector star = config.get_vector("problem", "theta_star");
  CHECK(star[1] == -0.5);
  const auto gammas = config.get_double_list("grid", "gammas");
  REQUIRE(gammas.size() == 2);
  CHECK(gammas[1] == 0.025);
  CHECK(config.get_int_or("grid", "replications", 0) == 8);
  CHECK(config.get_double_or("problem", "epsilon", 0.25) == 0.25);
}

TEST_CASE("config rejects malformed input") {
  CHECK_THROWS_AS(Config::parse_text("[problem]\nkind quadratic\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_text("kind = quadratic\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_text("[problem\nkind = quadratic\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_text("[problem]\nnot_a_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_text("[nosuchsection]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_file("/nonexistent/path/config.ini"), ConfigError);
}

TEST_CASE("overrides replace values and are validated") {
  Config config = Config::parse_text(kSampleConfig);
  config.apply_override("grid.replications=32");
  CHECK(config.get_int("grid", "replications") == 32);
  CHECK_THROWS_AS(config.apply_override("grid.bogus_key=1"), ConfigError);
  CHECK_THROWS_AS(config.apply_override("replications=32"), ConfigError);
  CHECK_THROWS_AS(config.apply_override("grid.replications"), ConfigError);
}

TEST_CASE("render is canonical and reparses to the same rendering") {
  Config config = Config::parse_text(kSampleConfig);
  const std::string rendered = config.render();
  const Config reparsed = Config::parse_text(rendered);
  CHECK(reparsed.render() == rendered);
  CHECK(reparsed.hash() == config.hash());
  config.apply_override("grid.master_seed=43");
  CHECK(config.hash() != reparsed.hash());
}

TEST_CASE("build_problem constructs each kind") {
  const Config quad = Config::parse_text(kSampleConfig);
  const auto q = build_problem(quad);
  CHECK(q->kind() == ProblemKind::Quadratic);
  CHECK(q->dim() == 2);
  CHECK(q->theta_star()[0] == 0.5);

  const Config lc = Config::parse_text(R"(
[problem]
kind = logcosh
dim = 1
hessian_scale = 1.0
epsilon = 0.5
perturb_centers = 0.5
noise_sigma = 1.0
)");
  const auto lc_problem = build_problem(lc);
  CHECK(lc_problem->kind() == ProblemKind::LogCoshPerturbedQuadratic);
  CHECK(lc_problem->gradient(lc_problem->theta_star()).norm() <= 1e-13);

  const Config reg = Config::parse_text(R"(
[problem]
kind = linear_regression
dim = 2
covariate_cov_diag = 1.0, 0.5
label_sigma = 0.7
)");
  const auto reg_problem = build_problem(reg);
  CHECK(reg_problem->kind() == ProblemKind::LinearRegression);
  CHECK(reg_problem->hessian_at_opt()(1, 1) == 0.5);

  const Config bad = Config::parse_text("[problem]\nkind = sine\ndim = 1\n");
  CHECK_THROWS_AS(build_problem(bad), ConfigError);
  const Config bad_dim = Config::parse_text("[problem]\nkind = quadratic\ndim = 0\n");
  CHECK_THROWS_AS(build_problem(bad_dim), ConfigError);
}

TEST_CASE("build_experiment_config resolves rules and defaults") {
  const Config config = Config::parse_text(kSampleConfig);
  const auto problem = build_problem(config);
  const ExperimentConfig exp = build_experiment_config(config, *problem);
  CHECK(exp.estimators.size() == 2);
  CHECK(exp.n_grid == std::vector<std::int64_t>{100, 200});
  CHECK(exp.gamma_rule.kind == GammaRule::Kind::Explicit);
  CHECK(exp.replications == 8);
  CHECK(exp.master_seed == 42);
  CHECK(exp.p_moments == std::vector<int>{2, 4});

  const Config power = Config::parse_text(R"(
[problem]
kind = quadratic
dim = 1
[estimator]
estimators = pr
[grid]
n_grid = 1000
gamma_rule = power
gamma_a = 1.0
gamma_beta = 0.5
replications = 4
)");
  const auto p2 = build_problem(power);
  const ExperimentConfig exp2 = build_experiment_config(power, *p2);
  CHECK(exp2.gamma_rule.kind == GammaRule::Kind::Power);
  CHECK(exp2.gamma_rule.beta == 0.5);
}

TEST_CASE("format_double round-trips exactly") {
  for (const double v : {0.1, 1.0 / 3.0, 1e-17, 12345.6789, -0.0625, 2.0}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(0.0625) == "0.0625");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("atomic write leaves no temporary behind") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path("io_test_tmp");
  fs::create_directories(dir);
  const std::string path = (dir / "x.csv").string();
  atomic_write_file(path, "a,b\n1,2\n");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "a,b");
  bool tmp_left = false;
  for (const auto& entry : fs::directory_iterator(dir))
    tmp_left = tmp_left || entry.path().string().find(".tmp") != std::string::npos;
  CHECK_FALSE(tmp_left);
  fs::remove_all(dir);
}

TEST_CASE("results csv has the pinned header and stable formatting") {
  RowRecord row;
  row.estimator = Estimator::PR;
  row.n = 1000;
  row.gamma = 0.0625;
  row.p = 2;
  row.error_moment = 0.5;
  row.std_err = 0.0078125;
  row.bias_norm = 0.25;
  row.replications = 100;
  row.valid = true;
  row.bias_vector = Vector::Zero(1);
  const std::string csv = results_csv({row});
  CHECK(csv ==
        "estimator,n,gamma,p,error_moment,std_err,bias_norm,replications,valid\n"
        "pr,1000,0.0625,2,0.5,0.0078125,0.25,100,1\n");
}

TEST_CASE("decay csv carries the m_gamma metadata header") {
  DecayCurve curve;
  curve.gamma = 0.1;
  curve.m_gamma = 28;
  curve.ks = {0, 1};
  curve.values = {1.0, 0.5};
  curve.std_errs = {0.0, 0.01};
  const std::string csv = decay_csv(curve);
  CHECK(csv.find("# m_gamma = 28") != std::string::npos);
  CHECK(csv.find("k,value,std_err") != std::string::npos);
}

TEST_CASE("fnv1a64 is stable") {
  CHECK(fnv1a64("") == 0xCBF29CE484222325ULL);
  CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
}
