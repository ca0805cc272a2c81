#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "llsm/hash.hpp"
#include "llsm/types.hpp"

namespace llsm {

// Standard Bloom filter over 16-byte keys. Double hashing: probe i uses
// g_i(x) = h1(x) + i*h2(x) mod m over one seeded 128-bit Murmur3 hash of the
// key bytes. Deterministic: identical inputs build bit-identical filters.
class BloomFilter {
  public:
    // m = ceil(n_expected * bits_per_key), k = max(1, round((m/n)*ln 2)).
    static BloomFilter create(u64 n_expected, double bits_per_key);

    // 1-bit always-false sentinel (m=1, k=1, nothing inserted).
    static BloomFilter sentinel();

    void insert(const Key& key);
    bool query(const Key& key) const;

    u64 bit_count() const { return m_; }
    u32 hash_count() const { return k_; }
    u64 inserted_count() const { return n_inserted_; }

    std::string serialize() const;
    static BloomFilter deserialize(const std::string& bytes);
    void save(const std::filesystem::path& path) const;
    static BloomFilter load(const std::filesystem::path& path);
    u64 serialized_bytes() const;

    friend bool operator==(const BloomFilter& a, const BloomFilter& b) {
        return a.m_ == b.m_ && a.k_ == b.k_ && a.n_inserted_ == b.n_inserted_ &&
               a.words_ == b.words_;
    }

  private:
    BloomFilter() = default;
    u64 m_ = 0;
    u32 k_ = 0;
    u64 n_inserted_ = 0;
    std::vector<u64> words_;
};

// (1 - e^(-kn/m))^k.
double theoretical_fpr(u64 n, u64 m, u32 k);

// Total filter bits for disk levels 1..L holding base_entries * T^i keys
// each at a flat bits-per-key: sum_{i=1..L} base_entries * T^i * bits_per_key.
double estimate_total_filter_bits(u64 base_entries, u32 size_ratio, u32 levels,
                                  double bits_per_key);

struct LevelAllocation {
    u32 level = 0;           // 1-based disk level
    double fpr = 1.0;        // target false positive rate f_i
    double bits_per_key = 0; // m_i implied by f_i at optimal k
};

struct MonkeyAllocation {
    std::vector<LevelAllocation> per_level;
    double total_bits_used = 0;  // sum n_i * m_i
    double expected_cost = 0;    // R = sum f_i * c_i
};

// Memory allocation with a log-uniform FPR profile: f_{i+1}/f_i = 1/T,
// each f_i clamped to <= 1. The base FPR is found by scalar (bisection)
// search so that sum n_i * m_i lands within 1% of the budget from below,
// where m_i = log2(1/f_i)/ln 2 bits per key (the optimal-k inversion).
// probe_costs may be empty (treated as all-ones).
MonkeyAllocation monkey_allocate(const std::vector<u64>& level_entry_counts, u32 size_ratio,
                                 double total_bits, const std::vector<double>& probe_costs = {});

}  // namespace llsm
