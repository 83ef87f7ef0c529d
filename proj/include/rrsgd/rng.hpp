#ifndef RRSGD_RNG_HPP
#define RRSGD_RNG_HPP

#include <array>
#include <cstdint>

#include "rrsgd/common.hpp"

namespace rrsgd {

/// SplitMix64 finalizer; bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x);

/// Philox4x32-10 counter-based generator block (Salmon et al. 2011).
/// Maps a 128-bit counter and 64-bit key to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32_10(const std::array<std::uint32_t, 4>& counter,
                                           const std::array<std::uint32_t, 2>& key);

/**
 * Seedable, replayable stream of Gaussian draws.
 *
 * A draw is a pure function of (master_seed, stream_index, counter):
 * draw t is computed by keyed Philox blocks at counter positions
 * (t, block) and Box-Muller, so a stream can be reset and replayed to
 * drive a second chain with the same noise sequence, and draws at any
 * position can be recomputed without stepping through predecessors.
 * Streams with distinct stream_index are independently keyed.
 */
class NoiseStream {
 public:
  NoiseStream(std::uint64_t master_seed, std::uint64_t stream_index, std::uint64_t counter = 0);

  /// Next logical draw: `m` standard normal variates; advances the counter by one.
  Vector next_gaussians(int m);

  /// The draw that next_gaussians would return at counter position `t`; no state change.
  Vector gaussians_at(std::uint64_t t, int m) const;

  void reset(std::uint64_t counter = 0) { counter_ = counter; }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }
  std::uint64_t counter() const { return counter_; }

  /// Independent stream under the same master seed.
  NoiseStream fork(std::uint64_t new_stream_index) const {
    return NoiseStream(master_seed_, new_stream_index);
  }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::uint64_t counter_;
  std::array<std::uint32_t, 2> key_;
};

/// Key used by NoiseStream for a given (master_seed, stream_index) pair.
std::uint64_t derive_stream_key(std::uint64_t master_seed, std::uint64_t stream_index);

}  // namespace rrsgd

#endif  // RRSGD_RNG_HPP
