#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "llsm/lookup.hpp"
#include "llsm/tree.hpp"
#include "llsm/workload.hpp"

namespace llsm {

// Raised when a variant returns a value that disagrees with the reference
// map: false negatives are counted, wrong values are fatal.
struct CorrectnessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Variant { kTraditional, kClassifier, kLearned };
const char* variant_name(Variant v);
std::optional<Variant> parse_variant(const std::string& name);

struct LoadConfig {
    u64 seed = 42;
    u64 pairs = 100000;
    std::filesystem::path dir;
    std::size_t memtable_bytes = 1 << 20;
    u32 size_ratio = 10;
    double bits_per_key = 10.0;
    u32 entries_per_block = 64;
};

struct LoadSummary {
    u64 pairs = 0;
    u64 flushes = 0;
    u64 compactions = 0;
    u64 raw_bytes = 0;   // pairs x 116
    u64 disk_bytes = 0;  // run files after compaction quiesced
    std::vector<u64> level_entries;
    u32 fingerprint = 0;
};

// Builds the tree from the seeded corpus via put/flush/compact, force-flushes
// the tail of the MemTable so every key is disk-resident, writes the
// key -> final-level label file and the run manifest.
LoadSummary cmd_load(const LoadConfig& config);

enum class TrainMode { kClassifier, kLearned };

struct TrainConfig {
    std::filesystem::path dir;
    TrainMode mode = TrainMode::kClassifier;
    // Negative-sampling ratio per disk level (L1 first); the last value
    // extends to deeper levels. 1.0 reproduces the 1:1:1 default of
    // positives : other-level keys : fresh absent keys.
    std::vector<double> neg_ratio{1.0};
    double subsample_percent = 20.0;     // applied when a level exceeds the threshold
    u64 subsample_threshold = 100000;
    GbtHyperparams classifier_params{};  // 200 trees, depth 6, lr 0.1
    GbtHyperparams lean_params{.n_trees = 4, .max_depth = 2, .learning_rate = 0.1,
                               .min_samples_leaf = 5, .max_bins = 256};
    double lean_negatives_per_positive = 2.0;  // fresh absent keys per positive
};

struct TrainedLevelInfo {
    u32 level = 0;
    u64 positives = 0;
    u64 train_rows = 0;
    double delta = 0.0;  // learned mode only
    u64 model_bytes = 0;
    u64 backup_bytes = 0;
    std::filesystem::path file;
};

std::vector<TrainedLevelInfo> cmd_train(const TrainConfig& config);

struct MetricsRow {
    std::string workload;
    std::string variant;
    u64 n_ops = 0;
    double avg_us = 0, p50_us = 0, p99_us = 0;
    u64 bloom_checks = 0, bloom_bypasses = 0;
    double bypass_rate_of_total = 0, bypass_rate_of_checks = 0;
    double fnr_overall = 0;
    double fnr_level[4] = {0, 0, 0, 0};
    double accuracy = 1.0;
    std::string filter_bytes_per_level;   // semicolon-joined, L0 first
    std::string model_bytes_per_level;
    std::string backup_bytes_per_level;
    std::string manifest_digest;
    // not serialized into the CSV
    u64 wrong_values = 0;
    u64 run_searches = 0;
    u64 bloom_probes_l0 = 0;
    u64 backup_probes = 0, backup_hits = 0;
    std::vector<double> per_op_us;
};

inline constexpr const char* kCsvHeader =
    "workload,variant,n_ops,avg_us,p50_us,p99_us,bloom_checks,bloom_bypasses,"
    "bypass_rate_of_total,bypass_rate_of_checks,fnr_overall,fnr_l0,fnr_l1,fnr_l2,fnr_l3,"
    "accuracy,filter_bytes_per_level,model_bytes_per_level,backup_bytes_per_level,"
    "manifest_digest";

struct BenchConfig {
    std::filesystem::path dir;
    std::vector<Variant> variants{Variant::kTraditional, Variant::kClassifier, Variant::kLearned};
    std::vector<WorkloadKind> workloads{WorkloadKind::kRandom, WorkloadKind::kSequential,
                                        WorkloadKind::kLevel0, WorkloadKind::kLevel1,
                                        WorkloadKind::kLevel2, WorkloadKind::kLevel3};
    u64 n_ops = 2000;
    double present_fraction = 0.8;
    u64 workload_seed = 7;
    std::filesystem::path out_csv;  // empty: no files written
    bool write_traces = true;
};

struct BenchResult {
    std::vector<MetricsRow> rows;
    std::map<u32, double> filter_probe_us;   // level -> mean traditional probe time
    std::map<u32, double> learned_probe_us;  // level -> mean learned-filter query time
};

BenchResult cmd_bench(const BenchConfig& config);

// Emits one plain-data file per figure from the CSV + trace files.
void cmd_report(const std::filesystem::path& csv, const std::filesystem::path& out_dir);

// Label file: u64 count, then count x (16-byte key || u32 level).
std::vector<std::pair<Key, u32>> read_labels(const std::filesystem::path& path);

// Manifest digest (config + corpus seed + tree fingerprint + model digests,
// timestamps excluded).
std::string manifest_digest(const std::filesystem::path& dir);

ResidencySnapshot snapshot_residency(const Tree& tree);

}  // namespace llsm
