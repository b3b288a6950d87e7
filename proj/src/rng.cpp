#include "unlearn/rng.hpp"

#include <cmath>

namespace unlearn {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer (Stafford mix13); full avalanche on 64 bits.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// Absorb one field into the running state.
inline std::uint64_t absorb(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v + kGolden + (h << 6) + (h >> 2)));
}

}  // namespace

std::uint64_t CouplingStream::word(const StreamKey& key, std::uint64_t counter) const {
  std::uint64_t h = mix64(master_seed_ + kGolden);
  h = absorb(h, replica_);
  h = absorb(h, (static_cast<std::uint64_t>(key.role) << 32) |
                    static_cast<std::uint64_t>(key.kind));
  h = absorb(h, key.step);
  h = absorb(h, key.slot);
  h = absorb(h, counter);
  return h;
}

std::uint64_t CouplingStream::uniform_index(const StreamKey& key, std::uint64_t bound,
                                            std::uint64_t counter_base) const {
  // Accept w only in the largest prefix divisible by bound.
  const std::uint64_t threshold = (0ULL - bound) % bound;  // 2^64 mod bound
  for (std::uint64_t c = counter_base;; ++c) {
    const std::uint64_t w = word(key, c);
    if (w >= threshold) return w % bound;
  }
}

double CouplingStream::uniform01(const StreamKey& key, std::uint64_t counter) const {
  const std::uint64_t w = word(key, counter);
  // 53 significant bits, shifted into (0, 1].
  return static_cast<double>((w >> 11) + 1) * 0x1.0p-53;
}

double CouplingStream::gaussian(const StreamKey& key, std::uint64_t pair_index) const {
  const double u1 = uniform01(key, 2 * pair_index);      // in (0, 1]
  const double u2 = uniform01(key, 2 * pair_index + 1);  // in (0, 1]
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * M_PI * u2;
  return r * std::cos(phi);
}

}  // namespace unlearn
