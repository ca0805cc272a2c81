#include "llsm/io.hpp"

#include <cstdio>
#include <fstream>

#include <fcntl.h>
#include <unistd.h>

#include "llsm/hash.hpp"

namespace llsm {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return data;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd < 0) throw IoError("cannot create " + tmp.string());
        std::size_t off = 0;
        while (off < bytes.size()) {
            ssize_t n = ::write(fd, bytes.data() + off, bytes.size() - off);
            if (n < 0) {
                ::close(fd);
                ::unlink(tmp.c_str());
                throw IoError("write failed: " + tmp.string());
            }
            off += static_cast<std::size_t>(n);
        }
        if (::fsync(fd) != 0) {
            ::close(fd);
            ::unlink(tmp.c_str());
            throw IoError("fsync failed: " + tmp.string());
        }
        ::close(fd);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("rename failed: " + path.string() + ": " + ec.message());
    }
}

void write_file_with_crc(const std::filesystem::path& path, const std::string& payload) {
    u32 crc = crc32(payload.data(), payload.size());
    std::string out = payload;
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((crc >> (8 * i)) & 0xFF));
    write_file_atomic(path, out);
}

std::string read_file_with_crc(const std::filesystem::path& path) {
    std::string data = read_file(path);
    if (data.size() < 4) throw DataError("file too short: " + path.string());
    std::string payload = data.substr(0, data.size() - 4);
    u32 stored = 0;
    for (int i = 0; i < 4; ++i) {
        stored |= static_cast<u32>(static_cast<u8>(data[data.size() - 4 + static_cast<std::size_t>(i)])) << (8 * i);
    }
    if (crc32(payload.data(), payload.size()) != stored) {
        throw DataError("CRC mismatch: " + path.string());
    }
    return payload;
}

Key Key::from_hex(const std::string& s) {
    if (s.size() != 2 * kKeySize) throw DataError("bad key hex length");
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw DataError("bad hex digit");
    };
    Key k;
    for (std::size_t i = 0; i < kKeySize; ++i) {
        k.bytes[i] = static_cast<u8>((nib(s[2 * i]) << 4) | nib(s[2 * i + 1]));
    }
    return k;
}

}  // namespace llsm
