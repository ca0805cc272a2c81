#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "llsm/hash.hpp"
#include "llsm/types.hpp"

namespace llsm {

// Seeded uniform-random corpus: keys drawn without replacement over the
// 128-bit space (collisions re-drawn), values pseudo-random bytes. The same
// seed yields a byte-identical stream. Generator: splitmix64 (llsm/hash.hpp).
void generate_corpus(u64 seed, u64 n_pairs, const std::function<void(const Entry&)>& sink);
std::vector<Entry> generate_corpus(u64 seed, u64 n_pairs);

// Raw 116-byte records.
void write_corpus_file(const std::filesystem::path& path, const std::vector<Entry>& corpus);
std::vector<Entry> read_corpus_file(const std::filesystem::path& path);

enum class WorkloadKind { kRandom, kSequential, kLevel0, kLevel1, kLevel2, kLevel3 };

const char* workload_name(WorkloadKind kind);
std::optional<WorkloadKind> parse_workload(const std::string& name);

struct WorkloadSpec {
    WorkloadKind kind = WorkloadKind::kRandom;
    u64 n_ops = 2000;
    u64 seed = 1;
    double present_fraction = 0.8;  // probes drawn from inserted keys
};

// Residency snapshot the generator samples from: per-level key lists plus a
// key -> level map for absent-key rejection sampling and ground truth.
struct ResidencySnapshot {
    std::vector<std::vector<Key>> keys_by_level;        // index 0 = L0
    std::vector<Key> all_present;                       // every key in the tree
    std::unordered_map<u128, int, U128Hash> level_of;   // -1 = memtable

    bool contains(const Key& k) const { return level_of.count(k.to_u128()) != 0; }
    int level(const Key& k) const {
        auto it = level_of.find(k.to_u128());
        return it == level_of.end() ? -2 : it->second;
    }
};

struct WorkloadProbe {
    Key key;
    int ground_truth_level = -2;  // -2 absent, -1 memtable, >= 0 disk level
};

// Random: present/absent mix per present_fraction, present keys uniform over
// the whole tree. Sequential: n_ops consecutive 128-bit integers from a
// seeded origin (mostly absent). LevelN: present keys sampled (with
// replacement) from the level-N snapshot, mixed with absent keys.
std::vector<WorkloadProbe> generate_workload(const WorkloadSpec& spec,
                                             const ResidencySnapshot& residency);

// Replay files: one hex-encoded 16-byte key per line.
void write_workload_file(const std::filesystem::path& path, const std::vector<WorkloadProbe>& w);
std::vector<Key> read_workload_file(const std::filesystem::path& path);

}  // namespace llsm
