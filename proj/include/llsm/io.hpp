#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "llsm/types.hpp"

namespace llsm {

// All on-disk integers are little-endian regardless of host byte order.

class ByteWriter {
  public:
    void put_u8(u8 v) { buf_.push_back(static_cast<char>(v)); }
    void put_u16(u16 v) { put_le(v, 2); }
    void put_u32(u32 v) { put_le(v, 4); }
    void put_u64(u64 v) { put_le(v, 8); }
    void put_f64(double v) { put_u64(std::bit_cast<u64>(v)); }
    void put_bytes(const void* p, std::size_t n) {
        buf_.append(static_cast<const char*>(p), n);
    }
    void put_key(const Key& k) { put_bytes(k.data(), kKeySize); }

    const std::string& bytes() const { return buf_; }
    std::string take() { return std::move(buf_); }
    std::size_t size() const { return buf_.size(); }

  private:
    void put_le(u64 v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    std::string buf_;
};

class ByteReader {
  public:
    ByteReader(const void* data, std::size_t len)
        : p_(static_cast<const u8*>(data)), len_(len) {}
    explicit ByteReader(const std::string& s) : ByteReader(s.data(), s.size()) {}

    u8 get_u8() { return static_cast<u8>(get_le(1)); }
    u16 get_u16() { return static_cast<u16>(get_le(2)); }
    u32 get_u32() { return static_cast<u32>(get_le(4)); }
    u64 get_u64() { return get_le(8); }
    double get_f64() { return std::bit_cast<double>(get_u64()); }
    void get_bytes(void* out, std::size_t n) {
        need(n);
        std::memcpy(out, p_ + pos_, n);
        pos_ += n;
    }
    Key get_key() {
        Key k;
        get_bytes(k.data(), kKeySize);
        return k;
    }

    std::size_t remaining() const { return len_ - pos_; }
    std::size_t position() const { return pos_; }

  private:
    void need(std::size_t n) const {
        if (pos_ + n > len_) throw DataError("truncated input");
    }
    u64 get_le(int n) {
        need(static_cast<std::size_t>(n));
        u64 v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<u64>(p_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    const u8* p_;
    std::size_t len_;
    std::size_t pos_ = 0;
};

// Whole-file helpers. write_file_atomic writes to "<path>.tmp", fsyncs and
// renames, so a failure never leaves a partially written destination.
std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

// Appends the payload's CRC-32 (4 bytes LE) and writes atomically.
void write_file_with_crc(const std::filesystem::path& path, const std::string& payload);
// Reads a file, verifies and strips the trailing CRC-32.
std::string read_file_with_crc(const std::filesystem::path& path);

}  // namespace llsm
