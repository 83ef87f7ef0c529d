#ifndef RRSGD_COMMON_HPP
#define RRSGD_COMMON_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rrsgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Invalid argument (dimension mismatch, non-SPD input, bad range).
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Requested quantity is not available for this problem kind.
class CapabilityError : public std::runtime_error {
 public:
  explicit CapabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Noise stream misuse (counter overflow, invalid draw request).
class StreamError : public std::runtime_error {
 public:
  explicit StreamError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An SGD iterate became non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& msg, std::uint64_t iterate_index, std::string chain = "")
      : std::runtime_error(msg), iterate_index(iterate_index), chain(std::move(chain)) {}
  std::uint64_t iterate_index;
  std::string chain;
};

/// Configuration file / CLI validation failure.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Rate-fit residuals are all below the noise floor; no exponent can be fitted.
class DegenerateFitError : public std::runtime_error {
 public:
  explicit DegenerateFitError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ArgumentError(msg);
}

}  // namespace rrsgd

#endif  // RRSGD_COMMON_HPP
