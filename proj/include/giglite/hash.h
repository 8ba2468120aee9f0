#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace giglite {

inline constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ULL;
inline constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr uint64_t fnv1a64(std::string_view bytes, uint64_t state = kFnvOffset) {
    for (unsigned char c : bytes) {
        state ^= c;
        state *= kFnvPrime;
    }
    return state;
}

uint64_t fnv1a64(std::span<const std::byte> bytes, uint64_t state = kFnvOffset);

constexpr uint64_t splitmix64(uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Appends little-endian bytes of `v` to `out`. All hashed identities go through
/// these helpers so that hashes are platform independent.
void append_le64(std::string& out, uint64_t v);
void append_le32(std::string& out, uint32_t v);

/// Maps a 64-bit hash onto [0, 1) using its top 53 bits.
inline double unit_interval(uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Seed derivation shared by every sampler backend:
/// splitmix64(global ^ fnv1a64(domain) ^ node_id ^ hop * golden).
struct SeedDerivation {
    uint64_t global_seed = 0;
    std::string domain = "khop";

    uint64_t derive(uint64_t node_id, uint64_t hop) const {
        return derive(global_seed, domain, node_id, hop);
    }
    static uint64_t derive(uint64_t global_seed, std::string_view domain, uint64_t node_id, uint64_t hop) {
        return splitmix64(global_seed ^ fnv1a64(domain) ^ node_id ^ (hop * kGolden));
    }
};

/// Counter-based generator: state advances by the golden gamma and each output is
/// splitmix64-finalized. Fully specified so both sampler backends draw identically.
class SplitMix64 {
  public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += kGolden);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound) by rejection; bound must be > 0.
    uint64_t below(uint64_t bound);

    double uniform() { return unit_interval(next()); }

    /// Standard normal via Box-Muller (no cached second value).
    double normal();

  private:
    uint64_t state_;
};

/// Picks min(n, k) distinct indices from [0, n) by a partial Fisher-Yates shuffle
/// driven by SplitMix64(seed); the result is sorted ascending.
std::vector<uint32_t> choose_without_replacement(uint32_t n, uint32_t k, uint64_t seed);

}  // namespace giglite
