#pragma once

#include <cstddef>

#include "llsm/types.hpp"

namespace llsm {

struct Hash128 {
    u64 h1 = 0;
    u64 h2 = 0;
};

// MurmurHash3 x64 128-bit variant. Seeded explicitly; all hashing in the
// engine is deterministic across processes and platforms.
Hash128 murmur3_x64_128(const void* data, std::size_t len, u32 seed);

// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320), zlib-compatible.
u32 crc32(const void* data, std::size_t len, u32 crc = 0);

// Incremental CRC-32 for streamed file writers.
class Crc32 {
  public:
    void update(const void* data, std::size_t len) { crc_ = crc32(data, len, crc_); }
    u32 value() const { return crc_; }

  private:
    u32 crc_ = 0;
};

// splitmix64: the pinned pseudo-random generator for corpus and workload
// generation. Constants follow Steele, Lea & Flood (2014):
//   state += 0x9E3779B97F4A7C15
//   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
class SplitMix64 {
  public:
    explicit SplitMix64(u64 seed) : state_(seed) {}

    u64 next() {
        u64 z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n) by rejection, unbiased for all n >= 1.
    u64 next_below(u64 n) {
        u64 threshold = (0 - n) % n;
        for (;;) {
            u64 r = next();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    u128 next_u128() { return (static_cast<u128>(next()) << 64) | next(); }

    Key next_key() { return Key::from_u128(next_u128()); }

  private:
    u64 state_;
};

struct U128Hash {
    std::size_t operator()(u128 x) const {
        u64 lo = static_cast<u64>(x);
        u64 hi = static_cast<u64>(x >> 64);
        u64 z = lo ^ (hi * 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        return static_cast<std::size_t>(z ^ (z >> 31));
    }
};

}  // namespace llsm
