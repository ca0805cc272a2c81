#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "llsm/types.hpp"

namespace llsm {

enum class FeatureSchema : u32 {
    kRich45 = 1,  // classifier path
    kLean12 = 2,  // learned-filter path
};

constexpr std::size_t feature_count(FeatureSchema s) {
    return s == FeatureSchema::kRich45 ? 45 : 12;
}

const char* schema_name(FeatureSchema s);

struct FeatureVector {
    FeatureSchema schema = FeatureSchema::kRich45;
    std::vector<double> values;
};

// The key is interpreted as the big-endian 128-bit unsigned integer x.
// Conversion to double goes through the two 64-bit halves
// (hi * 2^64 + lo, each half exactly converted); every transform below is
// total and produces a finite value.
double key_to_double(const Key& key);

// RICH45 layout (fixed order, indices 0..44):
//   0..2   x, x^2, x^3
//   3..5   log(1+x), log2(1+x), sqrt(x)
//   6..8   sin, cos, tan of x * 2*pi / 2^128        (tan clamped to +-1e12)
//   9..11  sin, cos, tan of (x mod 10^6)            (tan clamped to +-1e12)
//   12..15 decimal digit count, digit sum, leading digit, trailing digit
//   16..24 x mod p for p in {2, 3, 5, 7, 10, 16, 64, 97, 1000}
//   25..40 16 one-hot flags: x's slice among 16 equal parts of [0, 2^128)
//   41..44 popcount, msb index (-1 for x=0), leading zero bits (128 for x=0),
//          byte-wise sum of the 16 key bytes
void extract_rich(const Key& key, double* out45);
FeatureVector extract_rich(const Key& key);

// LEAN12 layout:
//   0..1   log(1+x), log2(1+x)
//   2..3   sin, cos of x * 2*pi / 2^128
//   4..6   popcount, msb index, leading zero bits
//   7..9   x mod 2, x mod 10, x mod 97
//   10..11 top byte, bottom byte
void extract_lean(const Key& key, double* out12);
FeatureVector extract_lean(const Key& key);

void extract(FeatureSchema schema, const Key& key, double* out);

}  // namespace llsm
