#include "llsm/features.hpp"

#include <bit>
#include <cmath>

namespace llsm {

namespace {

constexpr double kTanClamp = 1e12;
// 2*pi / 2^128
const double kPhaseScale = 6.283185307179586476925286766559 * std::exp2(-128.0);

inline double clamp_tan(double v) {
    if (v > kTanClamp) return kTanClamp;
    if (v < -kTanClamp) return -kTanClamp;
    return v;
}

struct DigitStats {
    double count;
    double sum;
    double leading;
    double trailing;
};

// x mod m through the 64-bit halves; avoids the 128-bit division call on
// the lookup path. Requires m small enough that the fold fits in 64 bits.
inline u64 mod_small(u128 x, u64 m) {
    u64 hi = static_cast<u64>(x >> 64) % m;
    u64 lo = static_cast<u64>(x) % m;
    u64 two64 = (~u64{0} % m + 1) % m;  // 2^64 mod m
    return (hi * two64 + lo) % m;
}

DigitStats digit_stats(u128 x) {
    if (x == 0) return {1, 0, 0, 0};
    DigitStats s{0, 0, 0, static_cast<double>(static_cast<u64>(x % 10))};
    u128 v = x;
    u64 lead = 0;
    while (v != 0) {
        lead = static_cast<u64>(v % 10);
        s.sum += static_cast<double>(lead);
        s.count += 1;
        v /= 10;
    }
    s.leading = static_cast<double>(lead);
    return s;
}

inline int popcount128(u128 x) {
    return std::popcount(static_cast<u64>(x >> 64)) + std::popcount(static_cast<u64>(x));
}

// Index of the most significant set bit; -1 for x = 0.
inline int msb_index128(u128 x) {
    u64 hi = static_cast<u64>(x >> 64);
    if (hi != 0) return 127 - std::countl_zero(hi);
    u64 lo = static_cast<u64>(x);
    if (lo != 0) return 63 - std::countl_zero(lo);
    return -1;
}

}  // namespace

const char* schema_name(FeatureSchema s) {
    return s == FeatureSchema::kRich45 ? "RICH45" : "LEAN12";
}

double key_to_double(const Key& key) {
    u128 x = key.to_u128();
    double hi = static_cast<double>(static_cast<u64>(x >> 64));
    double lo = static_cast<double>(static_cast<u64>(x));
    return hi * 0x1.0p64 + lo;
}

void extract_rich(const Key& key, double* out) {
    const u128 x = key.to_u128();
    const double xd = key_to_double(key);

    out[0] = xd;
    out[1] = xd * xd;
    out[2] = xd * xd * xd;
    out[3] = std::log1p(xd);
    out[4] = std::log2(1.0 + xd);
    out[5] = std::sqrt(xd);

    const double phase = xd * kPhaseScale;
    out[6] = std::sin(phase);
    out[7] = std::cos(phase);
    out[8] = clamp_tan(std::tan(phase));

    const double xm = static_cast<double>(mod_small(x, 1000000));
    out[9] = std::sin(xm);
    out[10] = std::cos(xm);
    out[11] = clamp_tan(std::tan(xm));

    const DigitStats ds = digit_stats(x);
    out[12] = ds.count;
    out[13] = ds.sum;
    out[14] = ds.leading;
    out[15] = ds.trailing;

    static constexpr u64 kMods[9] = {2, 3, 5, 7, 10, 16, 64, 97, 1000};
    for (int i = 0; i < 9; ++i) {
        out[16 + i] = static_cast<double>(mod_small(x, kMods[i]));
    }

    const unsigned slice = key.bytes[0] >> 4;  // top 4 bits select 1 of 16 slices
    for (unsigned i = 0; i < 16; ++i) {
        out[25 + i] = (i == slice) ? 1.0 : 0.0;
    }

    out[41] = static_cast<double>(popcount128(x));
    out[42] = static_cast<double>(msb_index128(x));
    out[43] = 127.0 - static_cast<double>(msb_index128(x));
    double byte_sum = 0;
    for (std::size_t i = 0; i < kKeySize; ++i) byte_sum += key.bytes[i];
    out[44] = byte_sum;
}

void extract_lean(const Key& key, double* out) {
    const u128 x = key.to_u128();
    const double xd = key_to_double(key);

    out[0] = std::log1p(xd);
    out[1] = out[0] * 1.4426950408889634;  // log2(1+x) = log1p(x)/ln 2
    const double phase = xd * kPhaseScale;
    out[2] = std::sin(phase);
    out[3] = std::cos(phase);
    out[4] = static_cast<double>(popcount128(x));
    out[5] = static_cast<double>(msb_index128(x));
    out[6] = 127.0 - static_cast<double>(msb_index128(x));
    out[7] = static_cast<double>(static_cast<u64>(x) & 1u);
    out[8] = static_cast<double>(mod_small(x, 10));
    out[9] = static_cast<double>(mod_small(x, 97));
    out[10] = static_cast<double>(key.bytes[0]);
    out[11] = static_cast<double>(key.bytes[kKeySize - 1]);
}

FeatureVector extract_rich(const Key& key) {
    FeatureVector v;
    v.schema = FeatureSchema::kRich45;
    v.values.resize(45);
    extract_rich(key, v.values.data());
    return v;
}

FeatureVector extract_lean(const Key& key) {
    FeatureVector v;
    v.schema = FeatureSchema::kLean12;
    v.values.resize(12);
    extract_lean(key, v.values.data());
    return v;
}

void extract(FeatureSchema schema, const Key& key, double* out) {
    if (schema == FeatureSchema::kRich45) {
        extract_rich(key, out);
    } else {
        extract_lean(key, out);
    }
}

}  // namespace llsm
