#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "llsm/bloom.hpp"
#include "llsm/hash.hpp"
#include "llsm/io.hpp"

using namespace llsm;

namespace {

std::vector<Key> random_keys(u64 seed, std::size_t n) {
    SplitMix64 rng(seed);
    std::vector<Key> keys(n);
    for (auto& k : keys) k = rng.next_key();
    return keys;
}

}  // namespace

TEST_CASE("crc32 matches the published check value") {
    // Standard CRC-32 check: crc32("123456789") = 0xCBF43926.
    CHECK(crc32("123456789", 9) == 0xCBF43926u);
}

TEST_CASE("murmur3 is deterministic and spreads") {
    Key a = Key::from_u128(1), b = Key::from_u128(2);
    Hash128 ha = murmur3_x64_128(a.data(), kKeySize, 1);
    Hash128 ha2 = murmur3_x64_128(a.data(), kKeySize, 1);
    Hash128 hb = murmur3_x64_128(b.data(), kKeySize, 1);
    CHECK(ha.h1 == ha2.h1);
    CHECK(ha.h2 == ha2.h2);
    CHECK(ha.h1 != hb.h1);
}

TEST_CASE("bf_create sizing and k") {
    // Oracle: k = (m/n) * ln 2 evaluated at full precision, then rounded.
    auto f1 = BloomFilter::create(1000, 10.0);
    CHECK(f1.bit_count() == 10000);
    CHECK(f1.hash_count() == static_cast<u32>(std::lround((10000.0 / 1000.0) * std::log(2.0))));
    CHECK(f1.hash_count() == 7);

    auto f2 = BloomFilter::create(1, 1.0);
    CHECK(f2.bit_count() == 1);
    CHECK(f2.hash_count() == 1);  // lower clamp

    auto f3 = BloomFilter::create(1000, 14.0);
    CHECK(f3.hash_count() == 10);  // round(9.704)

    CHECK_THROWS_AS(BloomFilter::create(0, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(BloomFilter::create(10, -1.0), std::invalid_argument);
}

TEST_CASE("no false negatives, empty filter rejects") {
    auto keys = random_keys(11, 100000);
    auto f = BloomFilter::create(keys.size(), 10.0);
    for (const Key& k : keys) f.insert(k);
    for (const Key& k : keys) CHECK(f.query(k));

    auto empty = BloomFilter::create(100, 10.0);
    int hits = 0;
    for (const Key& k : random_keys(12, 1000)) hits += empty.query(k) ? 1 : 0;
    CHECK(hits == 0);
}

TEST_CASE("measured FPR within [0.5x, 2x] of theoretical at 8, 10, 14 bits/key") {
    const std::size_t n = 100000;
    auto inserted = random_keys(21, n);
    auto probes = random_keys(22, n);  // disjoint with overwhelming probability
    for (double bpk : {8.0, 10.0, 14.0}) {
        auto f = BloomFilter::create(n, bpk);
        for (const Key& k : inserted) f.insert(k);
        u64 fp = 0;
        for (const Key& k : probes) fp += f.query(k) ? 1 : 0;
        double measured = static_cast<double>(fp) / static_cast<double>(n);
        double expected = theoretical_fpr(n, f.bit_count(), f.hash_count());
        CAPTURE(bpk);
        CAPTURE(measured);
        CAPTURE(expected);
        CHECK(measured >= 0.5 * expected);
        CHECK(measured <= 2.0 * expected);
    }
}

TEST_CASE("theoretical_fpr worked values") {
    // (1 - e^-0.7)^7, frozen from a high-precision evaluation.
    CHECK(theoretical_fpr(1000, 10000, 7) == doctest::Approx(0.008193722065862417).epsilon(1e-9));
    // Optimal-k identity: with real k = (m/n) ln 2 the formula equals (1/2)^k.
    double k_real = 10.0 * std::log(2.0);
    double form1 = std::pow(1.0 - std::exp(-k_real * 1000.0 / 10000.0), k_real);
    double form2 = std::pow(0.5, k_real);
    CHECK(std::abs(form1 - form2) / form2 <= 1e-3);
    CHECK(form2 == doctest::Approx(0.00819254946817896).epsilon(1e-9));
    // m -> infinity drives the rate to zero.
    CHECK(theoretical_fpr(1000, 1000000000ULL, 7) < 1e-30);
}

TEST_CASE("filters are deterministic and serialize round-trip") {
    auto keys = random_keys(31, 5000);
    auto a = BloomFilter::create(keys.size(), 10.0);
    auto b = BloomFilter::create(keys.size(), 10.0);
    for (const Key& k : keys) {
        a.insert(k);
        b.insert(k);
    }
    CHECK(a == b);
    CHECK(a.serialize() == b.serialize());
    CHECK(a.serialize().size() == a.serialized_bytes());

    auto c = BloomFilter::deserialize(a.serialize());
    CHECK(c == a);

    std::string corrupted = a.serialize();
    corrupted[20] = static_cast<char>(corrupted[20] ^ 0x01);
    CHECK_THROWS_AS(BloomFilter::deserialize(corrupted), DataError);
}

TEST_CASE("sentinel filter always answers false") {
    auto s = BloomFilter::sentinel();
    CHECK(s.bit_count() == 1);
    for (const Key& k : random_keys(41, 100)) CHECK_FALSE(s.query(k));
}

TEST_CASE("monkey allocation: geometric law and budget law") {
    std::vector<u64> counts{1000, 10000, 100000};
    double budget = 10.0 * (1000 + 10000 + 100000);
    auto alloc = monkey_allocate(counts, 10, budget);
    REQUIRE(alloc.per_level.size() == 3);
    // f_{i+1}/f_i = 1/T to 1e-9 relative.
    for (std::size_t i = 0; i + 1 < alloc.per_level.size(); ++i) {
        double ratio = alloc.per_level[i + 1].fpr / alloc.per_level[i].fpr;
        CHECK(std::abs(ratio - 0.1) / 0.1 <= 1e-9);
    }
    // Budget law: sum n_i m_i <= M, and within 1% from below.
    CHECK(alloc.total_bits_used <= budget);
    CHECK(alloc.total_bits_used >= 0.99 * budget);
}

TEST_CASE("monkey allocation: single level spends the whole budget") {
    std::vector<u64> counts{12345};
    double budget = 9.5 * 12345;
    auto alloc = monkey_allocate(counts, 10, budget);
    REQUIRE(alloc.per_level.size() == 1);
    CHECK(alloc.per_level[0].bits_per_key ==
          doctest::Approx(budget / 12345.0).epsilon(1e-6));
}

TEST_CASE("monkey allocation beats uniform bits when probes get pricier with depth") {
    // The log-uniform profile is the optimum of R = sum f_i c_i under the
    // bit budget when c_i grows as fast as n_i * T^i (deep probes cost
    // more). Costs c = (T^2, T^4) put the toy exactly in that regime; a
    // 1000-point grid over f1 is the oracle.
    std::vector<u64> counts{1000, 10000};
    const u32 T = 10;
    std::vector<double> costs{100.0, 10000.0};
    double budget = 10.0 * (1000 + 10000);
    auto alloc = monkey_allocate(counts, T, budget, costs);

    auto bits_for = [](double f) {
        return f >= 1.0 ? 0.0 : std::log2(1.0 / f) / std::log(2.0);
    };
    // Uniform allocation: equal bits per key everywhere.
    double m_uniform = budget / static_cast<double>(1000 + 10000);
    double f_uniform = std::pow(0.5, m_uniform * std::log(2.0));
    double r_uniform = costs[0] * f_uniform + costs[1] * f_uniform;

    CHECK(alloc.expected_cost < r_uniform);

    double best_grid = 1e300;
    for (int g = 1; g <= 1000; ++g) {
        double f1 = std::pow(10.0, -8.0 * g / 1000.0);  // grid over (1e-8, 1)
        double f2 = f1 / T;
        double used = 1000.0 * bits_for(f1) + 10000.0 * bits_for(f2);
        if (used > budget) continue;
        best_grid = std::min(best_grid, costs[0] * f1 + costs[1] * f2);
    }
    // The scalar search should be at least as good as the feasible grid.
    CHECK(alloc.expected_cost <= best_grid + 1e-9);

    // At flat costs the same profile is strictly worse than uniform bits on
    // this geometry; both outcomes are pinned so the trade-off stays visible.
    auto flat = monkey_allocate(counts, T, budget);
    CHECK(flat.expected_cost > 2.0 * f_uniform);
}

TEST_CASE("monkey allocation rejects bad input") {
    CHECK_THROWS_AS(monkey_allocate({}, 10, 100.0), std::invalid_argument);
    CHECK_THROWS_AS(monkey_allocate({0}, 10, 100.0), std::invalid_argument);
    CHECK_THROWS_AS(monkey_allocate({10}, 10, 0.0), std::invalid_argument);
}

TEST_CASE("estimate_total_filter_bits") {
    // sum_{i=1..5} (1e5 * 10^i) * 10 evaluated exactly. The underlying
    // text this mirrors prints 111,110,000 for the same sum, a factor
    // 1000 short of the arithmetic; the formula value is asserted here.
    CHECK(estimate_total_filter_bits(100000, 10, 5, 10.0) == 111110000000.0);
    CHECK(estimate_total_filter_bits(100000, 10, 0, 10.0) == 0.0);
    CHECK(estimate_total_filter_bits(100000, 10, 1, 10.0) == 10000000.0);
    CHECK_THROWS_AS(estimate_total_filter_bits(0, 10, 5, 10.0), std::invalid_argument);
}

TEST_CASE("serialized filter survives a file round-trip") {
    auto keys = random_keys(55, 2000);
    auto f = BloomFilter::create(keys.size(), 10.0);
    for (const Key& k : keys) f.insert(k);
    auto dir = std::filesystem::temp_directory_path() / "llsm_bf_test";
    std::filesystem::create_directories(dir);
    f.save(dir / "x.bf");
    auto g = BloomFilter::load(dir / "x.bf");
    CHECK(g == f);
    std::filesystem::remove_all(dir);
}
