#ifndef RRSGD_CHAINS_HPP
#define RRSGD_CHAINS_HPP

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "rrsgd/problems.hpp"

namespace rrsgd {

struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
};

/**
 * Artifacts of one constant step-size SGD run of 2n steps with tail
 * averaging over iterates k = n+1 .. 2n. Carries enough provenance
 * (stream key, starting counter, theta0) to replay the consumed draws.
 */
struct ChainRun {
  double gamma = 0.0;
  std::int64_t n = 0;
  Vector theta0;
  StreamKey stream;
  std::uint64_t stream_start_counter = 0;
  Vector tail_average;
  Vector theta_at_n_plus_1;
  Vector theta_at_2n;
  // Iterates k = 0, stride, 2*stride, ... when stride > 0 (k = 0 is theta0).
  int record_stride = 0;
  std::vector<Vector> recorded_path;
};

struct CoupledRun {
  ChainRun run_gamma;
  ChainRun run_2gamma;
  Vector rr_estimate;  // 2 * run_gamma.tail_average - run_2gamma.tail_average
};

/// True when gamma is within the contraction range gamma <= 1/(2L).
bool step_size_within_bound(const ProblemSpec& problem, double gamma);

/// One SGD step theta - gamma * grad F(theta, xi_next); consumes one draw.
Vector sgd_step(const ProblemSpec& problem, const Vector& theta, double gamma,
                NoiseStream& stream);

/// Run 2n steps from theta0 and tail-average iterates k = n+1 .. 2n.
/// Warns on stderr when gamma exceeds 1/(2L); throws DivergenceError with the
/// iterate index when an iterate becomes non-finite.
ChainRun run_tail_averaged(const ProblemSpec& problem, const Vector& theta0, double gamma,
                           std::int64_t n, NoiseStream& stream, int record_stride = 0);

/// Two chains with step sizes gamma and 2*gamma driven by the same draw
/// sequence in a single interleaved pass, combined into the extrapolated
/// estimate 2 * avg_gamma - avg_2gamma.
CoupledRun run_coupled_rr(const ProblemSpec& problem, const Vector& theta0, double gamma,
                          std::int64_t n, StreamKey key, int record_stride = 0);

/// 2 * avg_gamma - avg_2gamma.
Vector rr_combine(const Vector& avg_gamma, const Vector& avg_2gamma);

/// Synchronous coupling: two chains with the same step size and the same
/// draws from different starts. The observer sees every iterate pair,
/// including (0, theta0_a, theta0_b).
using PairObserver = std::function<void(std::int64_t k, const Vector& a, const Vector& b)>;
void run_synchronously_coupled(const ProblemSpec& problem, const Vector& theta0_a,
                               const Vector& theta0_b, double gamma, std::int64_t steps,
                               NoiseStream& stream, const PairObserver& observer);

}  // namespace rrsgd

#endif  // RRSGD_CHAINS_HPP
