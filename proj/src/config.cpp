#include "rrsgd/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace rrsgd {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

struct SchemaSection {
  const char* name;
  std::vector<const char*> keys;
};

const std::array<SchemaSection, 6>& schema() {
  static const std::array<SchemaSection, 6> s = {{
      {"problem",
       {"kind", "dim", "hessian", "hessian_diag", "hessian_scale", "theta_star", "quad_center",
        "epsilon", "perturb_centers", "noise_sigma", "noise_cov", "noise_cov_diag",
        "covariate_cov", "covariate_cov_diag", "covariate_cov_scale", "label_sigma",
        "noise_mc_samples"}},
      {"estimator", {"estimators", "p_moments", "theta0"}},
      {"grid",
       {"n_grid", "gammas", "gamma_rule", "gamma_a", "gamma_beta", "replications",
        "master_seed"}},
      {"run", {"estimator", "gamma", "n", "seed", "record_stride", "theta0"}},
      {"diagnostics",
       {"gamma", "theta0_a", "theta0_b", "max_k", "replications", "seed", "stationary_gammas",
        "stationary_p", "stationary_samples", "stationary_burn_in"}},
      {"output", {}},
  }};
  return s;
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str(), path);
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
  Config config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      config.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    config.sections_[section][key] = trim(line.substr(eq + 1));
  }
  config.validate_schema();
  return config;
}

void Config::apply_override(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like section.key=value: " + spec);
  const std::string path = trim(spec.substr(0, eq));
  const auto dot = path.find('.');
  if (dot == std::string::npos)
    throw ConfigError("override key must be section.key: " + spec);
  const std::string section = path.substr(0, dot);
  const std::string key = path.substr(dot + 1);
  set(section, key, trim(spec.substr(eq + 1)));
  validate_schema();
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = value;
}

void Config::validate_schema() const {
  for (const auto& [section, entries] : sections_) {
    const SchemaSection* found = nullptr;
    for (const auto& s : schema())
      if (section == s.name) found = &s;
    if (!found) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : entries) {
      bool known = false;
      for (const char* k : found->keys) known = known || key == k;
      if (!known)
        throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
    }
  }
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end() || !s->second.count(key))
    throw ConfigError("missing required config key " + section + "." + key);
  return s->second.at(key);
}

std::string Config::get_string_or(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

namespace {

double parse_double(const std::string& value, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse '" + value + "' as a number for " + where);
  }
}

std::int64_t parse_int(const std::string& value, const std::string& where) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse '" + value + "' as an integer for " + where);
  }
}

}  // namespace

double Config::get_double(const std::string& section, const std::string& key) const {
  return parse_double(get_string(section, key), section + "." + key);
}

double Config::get_double_or(const std::string& section, const std::string& key,
                             double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key) const {
  return parse_int(get_string(section, key), section + "." + key);
}

std::int64_t Config::get_int_or(const std::string& section, const std::string& key,
                                std::int64_t fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

std::uint64_t Config::get_uint64_or(const std::string& section, const std::string& key,
                                    std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string value = get_string(section, key);
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse '" + value + "' as an unsigned integer for " + section + "." +
                      key);
  }
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(get_string(section, key), ','))
    out.push_back(parse_double(item, section + "." + key));
  return out;
}

std::vector<std::int64_t> Config::get_int_list(const std::string& section,
                                               const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& item : split(get_string(section, key), ','))
    out.push_back(parse_int(item, section + "." + key));
  return out;
}

std::vector<std::string> Config::get_string_list(const std::string& section,
                                                 const std::string& key) const {
  return split(get_string(section, key), ',');
}

Vector Config::get_vector(const std::string& section, const std::string& key) const {
  const auto values = get_double_list(section, key);
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

Matrix Config::get_matrix(const std::string& section, const std::string& key) const {
  const auto rows = split(get_string(section, key), ';');
  require(!rows.empty(), "empty matrix for " + section + "." + key);
  std::vector<std::vector<double>> parsed;
  for (const auto& row : rows) {
    std::vector<double> entries;
    for (const auto& item : split(row, ','))
      entries.push_back(parse_double(item, section + "." + key));
    parsed.push_back(std::move(entries));
  }
  const std::size_t cols = parsed.front().size();
  Matrix m(static_cast<Eigen::Index>(parsed.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (parsed[i].size() != cols)
      throw ConfigError("ragged matrix rows for " + section + "." + key);
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parsed[i][j];
  }
  return m;
}

std::string Config::render() const {
  std::ostringstream out;
  for (const auto& s : schema()) {
    const auto found = sections_.find(s.name);
    if (found == sections_.end() || found->second.empty()) continue;
    out << '[' << s.name << "]\n";
    for (const char* key : s.keys) {
      const auto kv = found->second.find(key);
      if (kv != found->second.end()) out << key << " = " << kv->second << '\n';
    }
    out << '\n';
  }
  return out.str();
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (const unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::string Config::hash() const {
  const std::uint64_t h = fnv1a64(render());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

Matrix matrix_param(const Config& config, int dim, const std::string& base,
                    const std::string& full_key, const std::string& diag_key,
                    const std::string& scale_key, double scale_fallback) {
  if (config.has("problem", full_key)) {
    const Matrix m = config.get_matrix("problem", full_key);
    if (m.rows() != dim || m.cols() != dim)
      throw ConfigError(base + " must be " + std::to_string(dim) + "x" + std::to_string(dim));
    return m;
  }
  if (config.has("problem", diag_key)) {
    const Vector d = config.get_vector("problem", diag_key);
    if (d.size() != dim) throw ConfigError(base + " diagonal must have length " + std::to_string(dim));
    return Matrix(d.asDiagonal());
  }
  const double scale = config.get_double_or("problem", scale_key, scale_fallback);
  return scale * Matrix::Identity(dim, dim);
}

Vector vector_param(const Config& config, int dim, const std::string& key,
                    const Vector& fallback) {
  if (!config.has("problem", key)) return fallback;
  Vector v = config.get_vector("problem", key);
  if (v.size() == 1 && dim > 1) return Vector::Constant(dim, v[0]);
  if (v.size() != dim)
    throw ConfigError("problem." + key + " must have length " + std::to_string(dim));
  return v;
}

Theta0Spec parse_theta0(const std::string& value) {
  Theta0Spec spec;
  if (value == "at_optimum") {
    spec.mode = Theta0Spec::Mode::AtOptimum;
    return spec;
  }
  if (value.rfind("offset:", 0) == 0) {
    spec.mode = Theta0Spec::Mode::Offset;
    spec.radius = parse_double(value.substr(7), "theta0 offset radius");
    return spec;
  }
  spec.mode = Theta0Spec::Mode::Explicit;
  const auto items = split(value, ',');
  spec.value.resize(static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i)
    spec.value[static_cast<Eigen::Index>(i)] = parse_double(items[i], "theta0");
  return spec;
}

}  // namespace

ProblemPtr build_problem(const Config& config) {
  const std::string kind = config.get_string("problem", "kind");
  const int dim = static_cast<int>(config.get_int("problem", "dim"));
  if (dim < 1) throw ConfigError("problem.dim must be positive");
  const Vector zeros = Vector::Zero(dim);

  try {
    if (kind == "quadratic" || kind == "logcosh") {
      const Matrix hessian =
          matrix_param(config, dim, "problem hessian", "hessian", "hessian_diag", "hessian_scale", 1.0);
      Matrix noise_cov;
      if (config.has("problem", "noise_cov")) {
        noise_cov = config.get_matrix("problem", "noise_cov");
      } else if (config.has("problem", "noise_cov_diag")) {
        noise_cov = Matrix(config.get_vector("problem", "noise_cov_diag").asDiagonal());
      } else {
        const double sigma = config.get_double_or("problem", "noise_sigma", 1.0);
        noise_cov = sigma * sigma * Matrix::Identity(dim, dim);
      }
      if (noise_cov.rows() != dim || noise_cov.cols() != dim)
        throw ConfigError("noise covariance must be " + std::to_string(dim) + "x" +
                          std::to_string(dim));
      if (kind == "quadratic") {
        return make_quadratic(hessian, vector_param(config, dim, "theta_star", zeros), noise_cov);
      }
      const double epsilon = config.get_double_or("problem", "epsilon", 0.5);
      return make_logcosh(hessian, vector_param(config, dim, "quad_center", zeros), epsilon,
                          vector_param(config, dim, "perturb_centers", zeros), noise_cov);
    }
    if (kind == "linear_regression") {
      const Matrix cov = matrix_param(config, dim, "covariate covariance", "covariate_cov",
                                      "covariate_cov_diag", "covariate_cov_scale", 1.0);
      return make_linear_regression(cov, vector_param(config, dim, "theta_star", zeros),
                                    config.get_double_or("problem", "label_sigma", 1.0));
    }
  } catch (const ArgumentError& err) {
    throw ConfigError(std::string("invalid problem parameters: ") + err.what());
  }
  throw ConfigError("unknown problem.kind '" + kind +
                    "' (expected quadratic, logcosh, or linear_regression)");
}

ExperimentConfig build_experiment_config(const Config& config, const ProblemSpec& problem) {
  ExperimentConfig out;
  out.estimators.clear();
  for (const auto& name : config.get_string_list("estimator", "estimators"))
    out.estimators.push_back(estimator_from_string(name));

  if (config.has("estimator", "p_moments")) {
    out.p_moments.clear();
    for (const auto p : config.get_int_list("estimator", "p_moments"))
      out.p_moments.push_back(static_cast<int>(p));
  }
  out.theta0 = parse_theta0(config.get_string_or("estimator", "theta0", "offset:1"));

  out.n_grid = config.get_int_list("grid", "n_grid");
  const std::string rule = config.get_string_or("grid", "gamma_rule", "");
  if (rule == "power") {
    out.gamma_rule.kind = GammaRule::Kind::Power;
    out.gamma_rule.a = config.get_double_or("grid", "gamma_a", 1.0);
    out.gamma_rule.beta = config.get_double_or("grid", "gamma_beta", 0.5);
  } else if (rule.empty() || rule == "explicit") {
    if (!config.has("grid", "gammas"))
      throw ConfigError("grid.gammas is required unless grid.gamma_rule = power");
    out.gamma_rule.kind = GammaRule::Kind::Explicit;
    out.gamma_rule.gammas = config.get_double_list("grid", "gammas");
  } else {
    throw ConfigError("grid.gamma_rule must be 'power' or 'explicit'");
  }
  out.replications = config.get_int_or("grid", "replications", 2);
  out.master_seed = config.get_uint64_or("grid", "master_seed", 0);
  out.noise_mc_samples = config.get_int_or("problem", "noise_mc_samples", 200000);
  out.validate(problem);
  return out;
}

DiagnosticsConfig build_diagnostics_config(const Config& config, const ProblemSpec& problem) {
  DiagnosticsConfig out;
  out.gamma = config.get_double_or("diagnostics", "gamma", 0.1);
  if (out.gamma <= 0.0) throw ConfigError("diagnostics.gamma must be positive");
  const int dim = problem.dim();
  const Vector star = problem.theta_star();
  out.theta0_a = config.has("diagnostics", "theta0_a")
                     ? config.get_vector("diagnostics", "theta0_a")
                     : Vector(star + Vector::Ones(dim));
  out.theta0_b = config.has("diagnostics", "theta0_b")
                     ? config.get_vector("diagnostics", "theta0_b")
                     : Vector(star - Vector::Ones(dim));
  if (out.theta0_a.size() != dim || out.theta0_b.size() != dim)
    throw ConfigError("diagnostics start points must have length " + std::to_string(dim));
  out.max_k = config.get_int_or("diagnostics", "max_k", 0);
  out.replications = config.get_int_or("diagnostics", "replications", 1000);
  if (out.replications < 1) throw ConfigError("diagnostics.replications must be positive");
  out.seed = config.get_uint64_or("diagnostics", "seed", 0);
  out.stationary_gammas = config.has("diagnostics", "stationary_gammas")
                              ? config.get_double_list("diagnostics", "stationary_gammas")
                              : std::vector<double>{out.gamma};
  out.stationary_p = static_cast<int>(config.get_int_or("diagnostics", "stationary_p", 2));
  out.stationary_samples = config.get_int_or("diagnostics", "stationary_samples", 1000000);
  out.stationary_burn_in = config.get_int_or("diagnostics", "stationary_burn_in", 0);
  return out;
}

RunConfig build_run_config(const Config& config) {
  RunConfig out;
  out.estimator = config.get_string_or("run", "estimator", "pr");
  if (out.estimator != "pr" && out.estimator != "rr")
    throw ConfigError("run.estimator must be pr or rr");
  out.gamma = config.get_double_or("run", "gamma", 0.1);
  if (out.gamma <= 0.0) throw ConfigError("run.gamma must be positive");
  out.n = config.get_int_or("run", "n", 100);
  if (out.n < 1) throw ConfigError("run.n must be positive");
  out.seed = config.get_uint64_or("run", "seed", 0);
  out.record_stride = static_cast<int>(config.get_int_or("run", "record_stride", 0));
  if (out.record_stride < 0) throw ConfigError("run.record_stride must be non-negative");
  out.theta0 = parse_theta0(config.get_string_or("run", "theta0", "offset:1"));
  return out;
}

}  // namespace rrsgd
