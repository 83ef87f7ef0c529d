#ifndef RRSGD_CONFIG_HPP
#define RRSGD_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rrsgd/harness.hpp"
#include "rrsgd/problems.hpp"

namespace rrsgd {

/**
 * Experiment configuration file: INI-style sections [problem], [estimator],
 * [grid], [run], [diagnostics], [output] with key = value lines and
 * '#' comments. Keys are validated against the known schema; --set
 * overrides take "section.key=value".
 */
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text, const std::string& origin = "<text>");

  void apply_override(const std::string& spec);  // "section.key=value"

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key) const;
  std::int64_t get_int_or(const std::string& section, const std::string& key,
                          std::int64_t fallback) const;
  std::uint64_t get_uint64_or(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const;
  std::vector<double> get_double_list(const std::string& section, const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& section,
                                           const std::string& key) const;
  Vector get_vector(const std::string& section, const std::string& key) const;
  Matrix get_matrix(const std::string& section, const std::string& key) const;  // rows ';'-separated

  /// Canonical rendering: fixed section and key order, values verbatim.
  std::string render() const;
  /// FNV-1a 64-bit hash of the canonical rendering, as hex.
  std::string hash() const;

 private:
  void set(const std::string& section, const std::string& key, const std::string& value);
  void validate_schema() const;

  std::map<std::string, std::map<std::string, std::string>> sections_;
};

/// Build a problem from [problem].
ProblemPtr build_problem(const Config& config);

/// Build the harness configuration from [estimator] and [grid].
ExperimentConfig build_experiment_config(const Config& config, const ProblemSpec& problem);

struct DiagnosticsConfig {
  double gamma = 0.1;
  Vector theta0_a;
  Vector theta0_b;
  std::int64_t max_k = 0;  // 0: defaults to 2 m(gamma)
  std::int64_t replications = 1000;
  std::uint64_t seed = 0;
  std::vector<double> stationary_gammas;
  int stationary_p = 2;
  std::int64_t stationary_samples = 1000000;
  std::int64_t stationary_burn_in = 0;  // 0: 10 m(gamma)
};

DiagnosticsConfig build_diagnostics_config(const Config& config, const ProblemSpec& problem);

struct RunConfig {
  std::string estimator = "pr";
  double gamma = 0.1;
  std::int64_t n = 100;
  std::uint64_t seed = 0;
  int record_stride = 0;
  Theta0Spec theta0;
};

RunConfig build_run_config(const Config& config);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace rrsgd

#endif  // RRSGD_CONFIG_HPP
