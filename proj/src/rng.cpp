#include "rrsgd/rng.hpp"

#include <cmath>
#include <limits>

namespace rrsgd {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(const std::array<std::uint32_t, 4>& counter,
                                           const std::array<std::uint32_t, 2>& key) {
  std::uint32_t c0 = counter[0], c1 = counter[1], c2 = counter[2], c3 = counter[3];
  std::uint32_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c0, hi0, lo0);
    mulhilo(kPhiloxM1, c2, hi1, lo1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return {c0, c1, c2, c3};
}

std::uint64_t derive_stream_key(std::uint64_t master_seed, std::uint64_t stream_index) {
  return splitmix64(splitmix64(master_seed) + stream_index);
}

NoiseStream::NoiseStream(std::uint64_t master_seed, std::uint64_t stream_index, std::uint64_t counter)
    : master_seed_(master_seed), stream_index_(stream_index), counter_(counter) {
  const std::uint64_t key = derive_stream_key(master_seed, stream_index);
  key_ = {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
}

namespace {

// (0,1) strictly: zero is impossible, so log() below is always finite.
inline double to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

Vector NoiseStream::gaussians_at(std::uint64_t t, int m) const {
  if (m <= 0) throw StreamError("NoiseStream: draw size must be positive");
  Vector out(m);
  const int blocks = (m + 1) / 2;
  for (int b = 0; b < blocks; ++b) {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32),
        static_cast<std::uint32_t>(b), 0u};
    const auto r = philox4x32_10(ctr, key_);
    const std::uint64_t x0 = (static_cast<std::uint64_t>(r[1]) << 32) | r[0];
    const std::uint64_t x1 = (static_cast<std::uint64_t>(r[3]) << 32) | r[2];
    const double u1 = to_open_unit(x0);
    const double u2 = to_open_unit(x1);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    out[2 * b] = radius * std::cos(angle);
    if (2 * b + 1 < m) out[2 * b + 1] = radius * std::sin(angle);
  }
  return out;
}

Vector NoiseStream::next_gaussians(int m) {
  if (counter_ == std::numeric_limits<std::uint64_t>::max())
    throw StreamError("NoiseStream: counter exhausted");
  Vector draw = gaussians_at(counter_, m);
  ++counter_;
  return draw;
}

}  // namespace rrsgd
