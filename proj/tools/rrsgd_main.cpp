#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rrsgd/chains.hpp"
#include "rrsgd/config.hpp"
#include "rrsgd/diagnostics.hpp"
#include "rrsgd/harness.hpp"
#include "rrsgd/io.hpp"
#include "rrsgd/theory.hpp"

namespace {

using namespace rrsgd;
using nlohmann::ordered_json;

struct Options {
  std::string config_path;
  std::string out_dir = "./out";
  std::vector<std::string> overrides;
  int workers = 0;
  int verbosity = 0;
};

Config load_config(const Options& opts) {
  Config config = Config::parse_file(opts.config_path);
  for (const auto& spec : opts.overrides) config.apply_override(spec);
  return config;
}

ordered_json provenance_json(const Config& config) {
  ordered_json out;
  out["config_hash"] = config.hash();
  out["code_version"] = kCodeVersion;
  return out;
}

void info(const Options& opts, const std::string& message) {
  if (opts.verbosity > 0) std::fprintf(stderr, "rrsgd: %s\n", message.c_str());
}

int cmd_theory(const Options& opts) {
  const Config config = load_config(opts);
  const ProblemPtr problem = build_problem(config);
  const long mc_samples = config.get_int_or("problem", "noise_mc_samples", 200000);
  const TheoryReport report = theory_report(*problem, mc_samples);
  ordered_json out = theory_json(report);
  out["provenance"] = provenance_json(config);
  atomic_write_file(opts.out_dir + "/theory.json", out.dump(2) + "\n");
  info(opts, "wrote " + opts.out_dir + "/theory.json");
  return 0;
}

int cmd_experiment(const Options& opts) {
  const Config config = load_config(opts);
  const ProblemPtr problem = build_problem(config);
  ExperimentConfig exp = build_experiment_config(config, *problem);
  exp.workers = opts.workers;
  info(opts, "running experiment: " + std::to_string(exp.n_grid.size()) + " grid points, " +
                 std::to_string(exp.replications) + " replications, gamma rule " +
                 exp.gamma_rule.describe());
  ExperimentResult result = run_experiment(*problem, exp);
  result.config_hash = config.hash();
  result.code_version = kCodeVersion;
  atomic_write_file(opts.out_dir + "/results.csv", results_csv(result.rows));
  atomic_write_file(opts.out_dir + "/result.json",
                    result_json(result, config.render()).dump(2) + "\n");
  info(opts, "wrote " + opts.out_dir + "/results.csv and result.json");
  std::int64_t invalid = 0;
  for (const auto& row : result.rows) invalid += row.valid ? 0 : 1;
  if (invalid > 0) {
    std::fprintf(stderr, "rrsgd: %lld of %zu rows invalidated by divergent replications\n",
                 static_cast<long long>(invalid), result.rows.size());
    return 4;
  }
  return 0;
}

int cmd_diagnose(const Options& opts) {
  const Config config = load_config(opts);
  const ProblemPtr problem = build_problem(config);
  const DiagnosticsConfig diag = build_diagnostics_config(config, *problem);

  const std::int64_t max_k =
      diag.max_k > 0 ? diag.max_k : 2 * mixing_block_length(diag.gamma, problem->mu());
  info(opts, "coupling decay curve: gamma=" + format_double(diag.gamma) +
                 " max_k=" + std::to_string(max_k));
  const DecayCurve curve =
      coupling_contraction_curve(*problem, diag.gamma, diag.theta0_a, diag.theta0_b, max_k,
                                 diag.replications, diag.seed, opts.workers);
  atomic_write_file(opts.out_dir + "/decay.csv", decay_csv(curve));

  std::vector<StationaryRow> rows;
  for (std::size_t i = 0; i < diag.stationary_gammas.size(); ++i) {
    const double gamma = diag.stationary_gammas[i];
    StationaryRow row;
    row.gamma = gamma;
    row.p = diag.stationary_p;
    row.m_gamma = mixing_block_length(gamma, problem->mu());
    row.burn_in = diag.stationary_burn_in > 0 ? diag.stationary_burn_in : 10 * row.m_gamma;
    row.samples = diag.stationary_samples;
    const MomentEstimate estimate = stationary_moment_estimate(
        *problem, gamma, diag.stationary_p, row.burn_in, diag.stationary_samples,
        splitmix64(diag.seed + 0x5Au) + i);
    row.estimate = estimate.estimate;
    row.std_err = estimate.std_err;
    rows.push_back(row);
  }
  atomic_write_file(opts.out_dir + "/stationary.csv", stationary_csv(rows));
  info(opts, "wrote " + opts.out_dir + "/decay.csv and stationary.csv");
  return 0;
}

int cmd_run(const Options& opts) {
  const Config config = load_config(opts);
  const ProblemPtr problem = build_problem(config);
  const RunConfig run_cfg = build_run_config(config);
  const Vector theta0 = run_cfg.theta0.resolve(*problem);

  ordered_json out;
  out["estimator"] = run_cfg.estimator;
  out["gamma"] = run_cfg.gamma;
  out["n"] = run_cfg.n;
  out["seed"] = run_cfg.seed;
  out["theta0"] = vector_json(theta0);
  if (run_cfg.estimator == "pr") {
    NoiseStream stream(run_cfg.seed, 0);
    const ChainRun run = run_tail_averaged(*problem, theta0, run_cfg.gamma, run_cfg.n, stream,
                                           run_cfg.record_stride);
    out["tail_average"] = vector_json(run.tail_average);
    out["theta_at_n_plus_1"] = vector_json(run.theta_at_n_plus_1);
    out["theta_at_2n"] = vector_json(run.theta_at_2n);
  } else {
    const CoupledRun coupled = run_coupled_rr(*problem, theta0, run_cfg.gamma, run_cfg.n,
                                              StreamKey{run_cfg.seed, 0}, run_cfg.record_stride);
    out["tail_average_gamma"] = vector_json(coupled.run_gamma.tail_average);
    out["tail_average_2gamma"] = vector_json(coupled.run_2gamma.tail_average);
    out["rr_estimate"] = vector_json(coupled.rr_estimate);
  }
  out["provenance"] = provenance_json(config);
  atomic_write_file(opts.out_dir + "/run.json", out.dump(2) + "\n");
  info(opts, "wrote " + opts.out_dir + "/run.json");
  return 0;
}

struct CsvRow {
  std::string estimator;
  std::int64_t n = 0;
  double gamma = 0.0;
  int p = 2;
  double error_moment = 0.0;
  double std_err = 0.0;
  double bias_norm = 0.0;
  bool valid = true;
};

std::vector<CsvRow> parse_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open results file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty results file: " + path);
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    CsvRow row;
    std::getline(ss, row.estimator, ',');
    std::getline(ss, field, ',');
    row.n = std::stoll(field);
    std::getline(ss, field, ',');
    row.gamma = std::stod(field);
    std::getline(ss, field, ',');
    row.p = std::stoi(field);
    std::getline(ss, field, ',');
    row.error_moment = std::stod(field);
    std::getline(ss, field, ',');
    row.std_err = std::stod(field);
    std::getline(ss, field, ',');
    row.bias_norm = std::stod(field);
    std::getline(ss, field, ',');  // replications
    std::getline(ss, field, ',');
    row.valid = field == "1";
    rows.push_back(row);
  }
  return rows;
}

int cmd_fit(const Options& opts) {
  const std::string input = opts.out_dir + "/results.csv";
  const auto rows = parse_results_csv(input);
  ordered_json fits;
  for (const std::string est : {"pr", "rr"}) {
    std::vector<std::pair<double, double>> error_points, bias_points;
    for (const auto& row : rows) {
      if (row.estimator != est || row.p != 2 || !row.valid) continue;
      if (row.error_moment > 0.0)
        error_points.emplace_back(static_cast<double>(row.n), row.error_moment);
      if (row.bias_norm > 0.0) bias_points.emplace_back(row.gamma, row.bias_norm);
    }
    if (error_points.size() >= 3)
      fits[est + "_error_vs_n"] = rate_fit_json(fit_rate_exponent(error_points));
    if (bias_points.size() >= 3)
      fits[est + "_bias_vs_gamma"] = rate_fit_json(fit_rate_exponent(bias_points));
  }
  if (fits.empty())
    throw DegenerateFitError("no estimator has enough valid rows (>= 3 with p = 2) to fit");
  atomic_write_file(opts.out_dir + "/fits.json", fits.dump(2) + "\n");
  info(opts, "wrote " + opts.out_dir + "/fits.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constant step-size SGD with tail averaging and Richardson-Romberg extrapolation"};
  app.require_subcommand(1);

  Options opts;
  app.add_option("--config", opts.config_path, "Path to the experiment config file");
  app.add_option("--out", opts.out_dir, "Output directory (default ./out)");
  app.add_option("--set", opts.overrides, "Override a config key: section.key=value (repeatable)");
  app.add_option("--workers", opts.workers, "Worker threads (default: available parallelism)");
  app.add_flag("-v,--verbose", opts.verbosity, "Increase verbosity");

  CLI::App* theory = app.add_subcommand("theory", "Write closed-form theory quantities");
  CLI::App* run = app.add_subcommand("run", "Run a single chain or coupled pair");
  CLI::App* diagnose = app.add_subcommand("diagnose", "Coupling decay and stationary moments");
  CLI::App* experiment = app.add_subcommand("experiment", "Run the Monte-Carlo error grid");
  CLI::App* fit = app.add_subcommand("fit", "Fit rate exponents from results.csv");
  for (CLI::App* sub : {theory, run, diagnose, experiment, fit}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  const bool needs_config = !fit->parsed();
  if (needs_config && opts.config_path.empty()) {
    std::fprintf(stderr, "rrsgd: --config is required\n");
    return 2;
  }

  try {
    if (theory->parsed()) return cmd_theory(opts);
    if (run->parsed()) return cmd_run(opts);
    if (diagnose->parsed()) return cmd_diagnose(opts);
    if (experiment->parsed()) return cmd_experiment(opts);
    if (fit->parsed()) return cmd_fit(opts);
  } catch (const ConfigError& err) {
    std::fprintf(stderr, "rrsgd: config error: %s\n", err.what());
    return 2;
  } catch (const ArgumentError& err) {
    std::fprintf(stderr, "rrsgd: invalid argument: %s\n", err.what());
    return 2;
  } catch (const CapabilityError& err) {
    std::fprintf(stderr, "rrsgd: capability error: %s\n", err.what());
    return 3;
  } catch (const DivergenceError& err) {
    std::fprintf(stderr, "rrsgd: divergence: %s\n", err.what());
    return 4;
  } catch (const DegenerateFitError& err) {
    std::fprintf(stderr, "rrsgd: degenerate fit: %s\n", err.what());
    return 4;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "rrsgd: error: %s\n", err.what());
    return 1;
  }
  return 0;
}
