#include "llsm/hash.hpp"

#include <array>

namespace llsm {

namespace {

inline u64 rotl64(u64 x, int r) { return (x << r) | (x >> (64 - r)); }

inline u64 fmix64(u64 k) {
    k ^= k >> 33;
    k *= 0xFF51AFD7ED558CCDULL;
    k ^= k >> 33;
    k *= 0xC4CEB9FE1A85EC53ULL;
    k ^= k >> 33;
    return k;
}

inline u64 load_u64_le(const u8* p) {
    u64 v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

const std::array<u32, 256> kCrcTable = [] {
    std::array<u32, 256> t{};
    for (u32 i = 0; i < 256; ++i) {
        u32 c = i;
        for (int j = 0; j < 8; ++j) {
            c = (c & 1) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
        }
        t[i] = c;
    }
    return t;
}();

}  // namespace

Hash128 murmur3_x64_128(const void* data, std::size_t len, u32 seed) {
    const u8* p = static_cast<const u8*>(data);
    const std::size_t nblocks = len / 16;

    u64 h1 = seed;
    u64 h2 = seed;
    const u64 c1 = 0x87C37B91114253D5ULL;
    const u64 c2 = 0x4CF5AD432745937FULL;

    for (std::size_t i = 0; i < nblocks; ++i) {
        u64 k1 = load_u64_le(p + 16 * i);
        u64 k2 = load_u64_le(p + 16 * i + 8);

        k1 *= c1;
        k1 = rotl64(k1, 31);
        k1 *= c2;
        h1 ^= k1;
        h1 = rotl64(h1, 27);
        h1 += h2;
        h1 = h1 * 5 + 0x52DCE729;

        k2 *= c2;
        k2 = rotl64(k2, 33);
        k2 *= c1;
        h2 ^= k2;
        h2 = rotl64(h2, 31);
        h2 += h1;
        h2 = h2 * 5 + 0x38495AB5;
    }

    const u8* tail = p + nblocks * 16;
    u64 k1 = 0;
    u64 k2 = 0;
    switch (len & 15) {
        case 15: k2 ^= static_cast<u64>(tail[14]) << 48; [[fallthrough]];
        case 14: k2 ^= static_cast<u64>(tail[13]) << 40; [[fallthrough]];
        case 13: k2 ^= static_cast<u64>(tail[12]) << 32; [[fallthrough]];
        case 12: k2 ^= static_cast<u64>(tail[11]) << 24; [[fallthrough]];
        case 11: k2 ^= static_cast<u64>(tail[10]) << 16; [[fallthrough]];
        case 10: k2 ^= static_cast<u64>(tail[9]) << 8; [[fallthrough]];
        case 9:
            k2 ^= static_cast<u64>(tail[8]);
            k2 *= c2;
            k2 = rotl64(k2, 33);
            k2 *= c1;
            h2 ^= k2;
            [[fallthrough]];
        case 8: k1 ^= static_cast<u64>(tail[7]) << 56; [[fallthrough]];
        case 7: k1 ^= static_cast<u64>(tail[6]) << 48; [[fallthrough]];
        case 6: k1 ^= static_cast<u64>(tail[5]) << 40; [[fallthrough]];
        case 5: k1 ^= static_cast<u64>(tail[4]) << 32; [[fallthrough]];
        case 4: k1 ^= static_cast<u64>(tail[3]) << 24; [[fallthrough]];
        case 3: k1 ^= static_cast<u64>(tail[2]) << 16; [[fallthrough]];
        case 2: k1 ^= static_cast<u64>(tail[1]) << 8; [[fallthrough]];
        case 1:
            k1 ^= static_cast<u64>(tail[0]);
            k1 *= c1;
            k1 = rotl64(k1, 31);
            k1 *= c2;
            h1 ^= k1;
            break;
        default: break;
    }

    h1 ^= static_cast<u64>(len);
    h2 ^= static_cast<u64>(len);
    h1 += h2;
    h2 += h1;
    h1 = fmix64(h1);
    h2 = fmix64(h2);
    h1 += h2;
    h2 += h1;
    return {h1, h2};
}

u32 crc32(const void* data, std::size_t len, u32 crc) {
    const u8* p = static_cast<const u8*>(data);
    u32 c = crc ^ 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) {
        c = kCrcTable[(c ^ p[i]) & 0xFF] ^ (c >> 8);
    }
    return c ^ 0xFFFFFFFFu;
}

}  // namespace llsm
