#include <doctest.h>

#include <filesystem>
#include <unordered_set>

#include "llsm/harness.hpp"
#include "llsm/workload.hpp"

using namespace llsm;

namespace {

Tree tiny_tree(u64 seed, int n_keys) {
    TreeConfig cfg;
    cfg.memtable_bytes = 10 * kEntrySize;
    cfg.size_ratio = 4;
    cfg.in_memory = true;
    Tree tree(cfg);
    for (const Entry& e : generate_corpus(seed, static_cast<u64>(n_keys))) {
        tree.put(e.key, e.value);
    }
    if (!tree.memtable().empty()) tree.flush();
    return tree;
}

}  // namespace

TEST_CASE("corpus generation is deterministic") {
    auto a = generate_corpus(123, 1000);
    auto b = generate_corpus(123, 1000);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].key == b[i].key);
        CHECK(a[i].value == b[i].value);
    }
    auto c = generate_corpus(124, 10);
    CHECK_FALSE(c[0].key == a[0].key);
}

TEST_CASE("corpus keys are unique across a million draws") {
    std::unordered_set<u128, U128Hash> seen;
    seen.reserve(2000000);
    bool duplicate = false;
    generate_corpus(9, 1000000, [&](const Entry& e) {
        duplicate |= !seen.insert(e.key.to_u128()).second;
    });
    CHECK_FALSE(duplicate);
    CHECK(seen.size() == 1000000);
}

TEST_CASE("corpus byte arithmetic at the full published scale") {
    // 2.6e6 pairs of 116 bytes: 301.6 MB of raw records.
    CHECK(static_cast<u64>(2600000) * kEntrySize == 301600000ULL);
}

TEST_CASE("corpus file round-trip") {
    auto corpus = generate_corpus(5, 500);
    auto dir = std::filesystem::temp_directory_path() / "llsm_workload_test";
    std::filesystem::create_directories(dir);
    write_corpus_file(dir / "c.bin", corpus);
    auto back = read_corpus_file(dir / "c.bin");
    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(back[i].key == corpus[i].key);
        CHECK(back[i].value == corpus[i].value);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("random workload honors present_fraction = 1") {
    Tree tree = tiny_tree(7, 3000);
    ResidencySnapshot snap = snapshot_residency(tree);
    WorkloadSpec spec;
    spec.kind = WorkloadKind::kRandom;
    spec.n_ops = 2000;
    spec.seed = 3;
    spec.present_fraction = 1.0;
    auto probes = generate_workload(spec, snap);
    REQUIRE(probes.size() == 2000);
    for (const auto& p : probes) {
        CHECK(snap.contains(p.key));
        CHECK(p.ground_truth_level >= -1);
    }
}

TEST_CASE("sequential workload emits consecutive keys") {
    Tree tree = tiny_tree(7, 500);
    ResidencySnapshot snap = snapshot_residency(tree);
    WorkloadSpec spec;
    spec.kind = WorkloadKind::kSequential;
    spec.n_ops = 1000;
    spec.seed = 17;
    auto probes = generate_workload(spec, snap);
    REQUIRE(probes.size() == 1000);
    u128 origin = probes[0].key.to_u128();
    for (std::size_t i = 0; i < probes.size(); ++i) {
        CHECK(probes[i].key.to_u128() == origin + i);
    }
    // Mostly absent by construction.
    u64 present = 0;
    for (const auto& p : probes) present += p.ground_truth_level >= -1 ? 1 : 0;
    CHECK(present == 0);
}

TEST_CASE("level-targeted workloads draw present keys from that level only") {
    // 4120 keys leave L1 with three un-spilled merges under T=4.
    Tree tree = tiny_tree(8, 4120);
    ResidencySnapshot snap = snapshot_residency(tree);

    // Snapshot exactness: validate against an independent full scan.
    for (std::size_t level = 0; level < tree.level_count(); ++level) {
        std::unordered_set<u128, U128Hash> scan;
        const auto& runs = tree.level_runs(level);
        for (auto it = runs.rbegin(); it != runs.rend(); ++it) {
            (*it)->for_each([&](const Entry& e) { scan.insert(e.key.to_u128()); });
        }
        if (level < snap.keys_by_level.size()) {
            for (const Key& k : snap.keys_by_level[level]) {
                CHECK(scan.count(k.to_u128()) == 1);
            }
        }
    }

    WorkloadSpec spec;
    spec.kind = WorkloadKind::kLevel1;
    spec.n_ops = 500;
    spec.seed = 23;
    spec.present_fraction = 0.8;
    auto probes = generate_workload(spec, snap);
    u64 present = 0;
    for (const auto& p : probes) {
        if (p.ground_truth_level >= -1) {
            CHECK(p.ground_truth_level == 1);
            ++present;
        }
    }
    // Present mass tracks the fraction (binomial, wide tolerance).
    CHECK(present > 300);
    CHECK(present < 500);
}

TEST_CASE("empty target level is an error") {
    Tree tree = tiny_tree(7, 50);  // too small to populate L3
    ResidencySnapshot snap = snapshot_residency(tree);
    WorkloadSpec spec;
    spec.kind = WorkloadKind::kLevel3;
    spec.n_ops = 10;
    CHECK_THROWS_AS(generate_workload(spec, snap), DataError);
}

TEST_CASE("workload generation is deterministic and file round-trips") {
    Tree tree = tiny_tree(7, 2000);
    ResidencySnapshot snap = snapshot_residency(tree);
    WorkloadSpec spec;
    spec.kind = WorkloadKind::kRandom;
    spec.n_ops = 300;
    spec.seed = 31;
    auto a = generate_workload(spec, snap);
    auto b = generate_workload(spec, snap);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].key == b[i].key);

    auto dir = std::filesystem::temp_directory_path() / "llsm_workload_test2";
    std::filesystem::create_directories(dir);
    write_workload_file(dir / "w.keys", a);
    auto keys = read_workload_file(dir / "w.keys");
    REQUIRE(keys.size() == a.size());
    for (std::size_t i = 0; i < keys.size(); ++i) CHECK(keys[i] == a[i].key);
    std::filesystem::remove_all(dir);
}

TEST_CASE("workload name parsing") {
    CHECK(parse_workload("random") == WorkloadKind::kRandom);
    CHECK(parse_workload("l2") == WorkloadKind::kLevel2);
    CHECK(parse_workload("level2") == WorkloadKind::kLevel2);
    CHECK_FALSE(parse_workload("zipf").has_value());
    CHECK(std::string(workload_name(WorkloadKind::kSequential)) == "sequential");
}
