#ifndef RRSGD_IO_HPP
#define RRSGD_IO_HPP

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "rrsgd/config.hpp"
#include "rrsgd/diagnostics.hpp"
#include "rrsgd/harness.hpp"
#include "rrsgd/theory.hpp"

namespace rrsgd {

inline constexpr const char* kCodeVersion = "rrsgd 0.1.0";

/// Shortest representation that round-trips the double exactly.
std::string format_double(double value);

/// Write via a temporary file in the same directory plus rename, so a
/// partial file is never observable at `path`.
void atomic_write_file(const std::string& path, const std::string& content);

std::string results_csv(const std::vector<RowRecord>& rows);
std::string decay_csv(const DecayCurve& curve);

struct StationaryRow {
  double gamma = 0.0;
  int p = 2;
  double estimate = 0.0;
  double std_err = 0.0;
  std::int64_t m_gamma = 0;
  std::int64_t burn_in = 0;
  std::int64_t samples = 0;
};
std::string stationary_csv(const std::vector<StationaryRow>& rows);

nlohmann::ordered_json matrix_json(const Matrix& m);
nlohmann::ordered_json vector_json(const Vector& v);
nlohmann::ordered_json theory_json(const TheoryReport& report);
nlohmann::ordered_json rate_fit_json(const RateFit& fit);
nlohmann::ordered_json result_json(const ExperimentResult& result, const std::string& config_ini);

}  // namespace rrsgd

#endif  // RRSGD_IO_HPP
