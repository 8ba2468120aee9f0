#include "giglite/hash.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace giglite {

uint64_t fnv1a64(std::span<const std::byte> bytes, uint64_t state) {
    for (std::byte b : bytes) {
        state ^= static_cast<uint64_t>(b);
        state *= kFnvPrime;
    }
    return state;
}

void append_le64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

void append_le32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

uint64_t SplitMix64::below(uint64_t bound) {
    // Reject the top partial block so every residue is equally likely.
    const uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    uint64_t x;
    do {
        x = next();
    } while (x >= limit);
    return x % bound;
}

double SplitMix64::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<uint32_t> choose_without_replacement(uint32_t n, uint32_t k, uint64_t seed) {
    std::vector<uint32_t> idx(n);
    for (uint32_t i = 0; i < n; ++i) {
        idx[i] = i;
    }
    if (k >= n) {
        return idx;
    }
    SplitMix64 rng(seed);
    for (uint32_t i = 0; i < k; ++i) {
        const uint32_t j = i + static_cast<uint32_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace giglite
