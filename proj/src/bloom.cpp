#include "llsm/bloom.hpp"

#include <cmath>

#include "llsm/io.hpp"

namespace llsm {

namespace {
constexpr u32 kBloomSeed = 0x4C534D42;  // fixed; filters must be reproducible
constexpr char kBloomMagic[8] = {'L', 'L', 'S', 'M', 'B', 'F', '0', '1'};
}  // namespace

BloomFilter BloomFilter::create(u64 n_expected, double bits_per_key) {
    if (n_expected < 1) throw std::invalid_argument("bloom: n_expected must be >= 1");
    if (!(bits_per_key > 0)) throw std::invalid_argument("bloom: bits_per_key must be > 0");
    BloomFilter f;
    f.m_ = static_cast<u64>(std::ceil(static_cast<double>(n_expected) * bits_per_key));
    if (f.m_ == 0) f.m_ = 1;
    double k_real = (static_cast<double>(f.m_) / static_cast<double>(n_expected)) * std::log(2.0);
    long k = std::lround(k_real);
    f.k_ = static_cast<u32>(k < 1 ? 1 : k);
    f.words_.assign((f.m_ + 63) / 64, 0);
    return f;
}

BloomFilter BloomFilter::sentinel() {
    BloomFilter f;
    f.m_ = 1;
    f.k_ = 1;
    f.words_.assign(1, 0);
    return f;
}

void BloomFilter::insert(const Key& key) {
    Hash128 h = murmur3_x64_128(key.data(), kKeySize, kBloomSeed);
    u64 pos = h.h1;
    for (u32 i = 0; i < k_; ++i) {
        u64 bit = pos % m_;
        words_[bit >> 6] |= (1ULL << (bit & 63));
        pos += h.h2;
    }
    ++n_inserted_;
}

bool BloomFilter::query(const Key& key) const {
    Hash128 h = murmur3_x64_128(key.data(), kKeySize, kBloomSeed);
    u64 pos = h.h1;
    for (u32 i = 0; i < k_; ++i) {
        u64 bit = pos % m_;
        if ((words_[bit >> 6] & (1ULL << (bit & 63))) == 0) return false;
        pos += h.h2;
    }
    return true;
}

std::string BloomFilter::serialize() const {
    ByteWriter w;
    w.put_bytes(kBloomMagic, 8);
    w.put_u64(m_);
    w.put_u32(k_);
    w.put_u64(n_inserted_);
    // bit array padded to a byte boundary
    u64 nbytes = (m_ + 7) / 8;
    for (u64 i = 0; i < nbytes; ++i) {
        w.put_u8(static_cast<u8>((words_[i >> 3] >> (8 * (i & 7))) & 0xFF));
    }
    std::string payload = w.take();
    u32 crc = crc32(payload.data(), payload.size());
    ByteWriter tail;
    tail.put_u32(crc);
    return payload + tail.bytes();
}

BloomFilter BloomFilter::deserialize(const std::string& bytes) {
    if (bytes.size() < 12) throw DataError("bloom: truncated");
    std::string payload = bytes.substr(0, bytes.size() - 4);
    ByteReader tail(bytes.data() + bytes.size() - 4, 4);
    if (tail.get_u32() != crc32(payload.data(), payload.size())) {
        throw DataError("bloom: CRC mismatch");
    }
    ByteReader r(payload);
    char magic[8];
    r.get_bytes(magic, 8);
    if (std::memcmp(magic, kBloomMagic, 8) != 0) throw DataError("bloom: bad magic");
    BloomFilter f;
    f.m_ = r.get_u64();
    f.k_ = r.get_u32();
    f.n_inserted_ = r.get_u64();
    if (f.m_ == 0 || f.k_ == 0) throw DataError("bloom: bad parameters");
    u64 nbytes = (f.m_ + 7) / 8;
    if (r.remaining() != nbytes) throw DataError("bloom: bad bit array length");
    f.words_.assign((f.m_ + 63) / 64, 0);
    for (u64 i = 0; i < nbytes; ++i) {
        f.words_[i >> 3] |= static_cast<u64>(r.get_u8()) << (8 * (i & 7));
    }
    return f;
}

void BloomFilter::save(const std::filesystem::path& path) const {
    write_file_atomic(path, serialize());
}

BloomFilter BloomFilter::load(const std::filesystem::path& path) {
    return deserialize(read_file(path));
}

u64 BloomFilter::serialized_bytes() const {
    return 8 + 8 + 4 + 8 + (m_ + 7) / 8 + 4;
}

double theoretical_fpr(u64 n, u64 m, u32 k) {
    if (m == 0 || k == 0) throw std::invalid_argument("theoretical_fpr: m > 0 and k >= 1 required");
    double inner = 1.0 - std::exp(-static_cast<double>(k) * static_cast<double>(n) /
                                  static_cast<double>(m));
    return std::pow(inner, static_cast<double>(k));
}

double estimate_total_filter_bits(u64 base_entries, u32 size_ratio, u32 levels,
                                  double bits_per_key) {
    if (base_entries == 0 || size_ratio == 0 || !(bits_per_key > 0)) {
        throw std::invalid_argument("estimate_total_filter_bits: positive arguments required");
    }
    double total = 0;
    double level_entries = static_cast<double>(base_entries);
    for (u32 i = 1; i <= levels; ++i) {
        level_entries *= static_cast<double>(size_ratio);
        total += level_entries * bits_per_key;
    }
    return total;
}

namespace {

// f_i for levels 1..L given the base f_1, clamped to <= 1.
double level_fpr(double f1, u32 level_index_one_based, u32 T) {
    double f = f1;
    for (u32 i = 1; i < level_index_one_based; ++i) f /= static_cast<double>(T);
    return f > 1.0 ? 1.0 : f;
}

double bits_per_key_for_fpr(double f) {
    if (f >= 1.0) return 0.0;
    constexpr double ln2 = 0.6931471805599453;
    return std::log2(1.0 / f) / ln2;
}

double budget_used(double f1, const std::vector<u64>& counts, u32 T) {
    double total = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        double f = level_fpr(f1, static_cast<u32>(i + 1), T);
        total += static_cast<double>(counts[i]) * bits_per_key_for_fpr(f);
    }
    return total;
}

}  // namespace

MonkeyAllocation monkey_allocate(const std::vector<u64>& level_entry_counts, u32 size_ratio,
                                 double total_bits, const std::vector<double>& probe_costs) {
    if (level_entry_counts.empty()) throw std::invalid_argument("monkey: no levels");
    for (u64 n : level_entry_counts) {
        if (n == 0) throw std::invalid_argument("monkey: level entry counts must be positive");
    }
    if (size_ratio < 2) throw std::invalid_argument("monkey: size ratio must be >= 2");
    if (!(total_bits > 0)) throw std::invalid_argument("monkey: budget must be positive");

    const u32 T = size_ratio;
    const std::size_t L = level_entry_counts.size();

    // budget_used is monotone decreasing in f_1; bisect log(f_1).
    // Upper end allows f_1 large enough that every level clamps to 1
    // (zero bits), lower end drives FPRs far below representable need.
    double lo = -256.0 * 0.6931471805599453;  // log f_1, extremely small f_1
    double hi = std::log(std::pow(static_cast<double>(T), static_cast<double>(L)));
    for (int iter = 0; iter < 200; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (budget_used(std::exp(mid), level_entry_counts, T) > total_bits) {
            lo = mid;  // too many bits -> raise f_1
        } else {
            hi = mid;
        }
    }
    double f1 = std::exp(hi);  // hi side satisfies used <= budget

    MonkeyAllocation out;
    out.per_level.resize(L);
    for (std::size_t i = 0; i < L; ++i) {
        double f = level_fpr(f1, static_cast<u32>(i + 1), T);
        out.per_level[i].level = static_cast<u32>(i + 1);
        out.per_level[i].fpr = f;
        out.per_level[i].bits_per_key = bits_per_key_for_fpr(f);
        out.total_bits_used +=
            static_cast<double>(level_entry_counts[i]) * out.per_level[i].bits_per_key;
        double cost = i < probe_costs.size() ? probe_costs[i] : 1.0;
        out.expected_cost += f * cost;
    }
    return out;
}

}  // namespace llsm
