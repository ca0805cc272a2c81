#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

namespace llsm {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using u128 = unsigned __int128;

inline constexpr std::size_t kKeySize = 16;
inline constexpr std::size_t kValueSize = 100;
inline constexpr std::size_t kEntrySize = kKeySize + kValueSize;

// Fixed 16-byte key. Lexicographic byte order equals numeric order of the
// big-endian 128-bit unsigned interpretation.
struct Key {
    std::array<u8, kKeySize> bytes{};

    static Key from_u128(u128 x) {
        Key k;
        for (std::size_t i = 0; i < kKeySize; ++i) {
            k.bytes[kKeySize - 1 - i] = static_cast<u8>(x >> (8 * i));
        }
        return k;
    }

    u128 to_u128() const {
        u128 x = 0;
        for (std::size_t i = 0; i < kKeySize; ++i) {
            x = (x << 8) | bytes[i];
        }
        return x;
    }

    const u8* data() const { return bytes.data(); }
    u8* data() { return bytes.data(); }

    friend bool operator==(const Key& a, const Key& b) { return a.bytes == b.bytes; }
    friend bool operator!=(const Key& a, const Key& b) { return !(a == b); }
    friend bool operator<(const Key& a, const Key& b) {
        return std::memcmp(a.bytes.data(), b.bytes.data(), kKeySize) < 0;
    }
    friend bool operator<=(const Key& a, const Key& b) { return !(b < a); }
    friend bool operator>(const Key& a, const Key& b) { return b < a; }
    friend bool operator>=(const Key& a, const Key& b) { return !(a < b); }

    std::string to_hex() const {
        static const char* d = "0123456789abcdef";
        std::string s(2 * kKeySize, '0');
        for (std::size_t i = 0; i < kKeySize; ++i) {
            s[2 * i] = d[bytes[i] >> 4];
            s[2 * i + 1] = d[bytes[i] & 0xF];
        }
        return s;
    }

    static Key from_hex(const std::string& s);
};

struct Value {
    std::array<u8, kValueSize> bytes{};

    const u8* data() const { return bytes.data(); }
    u8* data() { return bytes.data(); }

    friend bool operator==(const Value& a, const Value& b) { return a.bytes == b.bytes; }
    friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }
};

// One stored record.
struct Entry {
    Key key;
    Value value;
};

// Error taxonomy: IoError for filesystem failures, DataError for malformed
// or corrupt on-disk artifacts. Both map to distinct CLI exit codes.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace llsm
