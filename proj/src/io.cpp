#include "rrsgd/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rrsgd {

using nlohmann::ordered_json;

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

void atomic_write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out.good()) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string results_csv(const std::vector<RowRecord>& rows) {
  std::ostringstream out;
  out << "estimator,n,gamma,p,error_moment,std_err,bias_norm,replications,valid\n";
  for (const auto& row : rows) {
    out << to_string(row.estimator) << ',' << row.n << ',' << format_double(row.gamma) << ','
        << row.p << ',' << format_double(row.error_moment) << ',' << format_double(row.std_err)
        << ',' << format_double(row.bias_norm) << ',' << row.replications << ','
        << (row.valid ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string decay_csv(const DecayCurve& curve) {
  std::ostringstream out;
  out << "# gamma = " << format_double(curve.gamma) << '\n';
  out << "# m_gamma = " << curve.m_gamma << '\n';
  out << "k,value,std_err\n";
  for (std::size_t i = 0; i < curve.ks.size(); ++i) {
    out << curve.ks[i] << ',' << format_double(curve.values[i]) << ','
        << format_double(curve.std_errs[i]) << '\n';
  }
  return out.str();
}

std::string stationary_csv(const std::vector<StationaryRow>& rows) {
  std::ostringstream out;
  out << "gamma,p,estimate,std_err,m_gamma,burn_in,samples\n";
  for (const auto& row : rows) {
    out << format_double(row.gamma) << ',' << row.p << ',' << format_double(row.estimate) << ','
        << format_double(row.std_err) << ',' << row.m_gamma << ',' << row.burn_in << ','
        << row.samples << '\n';
  }
  return out.str();
}

ordered_json matrix_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json vector_json(const Vector& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

ordered_json theory_json(const TheoryReport& report) {
  ordered_json out;
  out["hessian"] = matrix_json(report.hessian);
  out["noise_cov"] = matrix_json(report.noise_cov);
  out["noise_cov_exact"] = report.noise_cov_exact;
  out["noise_cov_std_err"] = report.noise_cov_std_err;
  out["trace_noise_cov"] = report.trace_noise_cov;
  out["asymptotic_cov"] = matrix_json(report.asymptotic_cov);
  out["tc_matrix"] = matrix_json(report.tc_matrix);
  out["delta1"] = vector_json(report.delta1);
  return out;
}

ordered_json rate_fit_json(const RateFit& fit) {
  ordered_json out;
  out["slope"] = fit.slope;
  out["intercept"] = fit.intercept;
  out["r_squared"] = fit.r_squared;
  ordered_json points = ordered_json::array();
  for (const auto& [x, y] : fit.points) points.push_back(ordered_json::array({x, y}));
  out["points"] = std::move(points);
  return out;
}

ordered_json result_json(const ExperimentResult& result, const std::string& config_ini) {
  ordered_json out;
  ordered_json rows = ordered_json::array();
  for (const auto& row : result.rows) {
    ordered_json r;
    r["estimator"] = to_string(row.estimator);
    r["n"] = row.n;
    r["gamma"] = row.gamma;
    r["p"] = row.p;
    r["error_moment"] = row.error_moment;
    r["std_err"] = row.std_err;
    r["error_moment_unweighted"] = row.error_moment_unweighted;
    r["bias_vector"] = vector_json(row.bias_vector);
    r["bias_norm"] = row.bias_norm;
    r["replications"] = row.replications;
    r["divergences"] = row.divergences;
    r["valid"] = row.valid;
    rows.push_back(std::move(r));
  }
  out["rows"] = std::move(rows);
  ordered_json fits;
  for (const auto& [name, fit] : result.rate_fits) fits[name] = rate_fit_json(fit);
  out["rate_fits"] = std::move(fits);
  out["theory"] = theory_json(result.theory);
  ordered_json provenance;
  provenance["config_hash"] = result.config_hash;
  provenance["master_seed"] = result.master_seed;
  provenance["code_version"] = result.code_version;
  provenance["config_ini"] = config_ini;
  out["provenance"] = std::move(provenance);
  return out;
}

}  // namespace rrsgd
