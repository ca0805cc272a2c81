#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "llsm/memtable.hpp"
#include "llsm/run.hpp"
#include "llsm/types.hpp"

namespace llsm {

struct TreeConfig {
    std::size_t memtable_bytes = 1 << 20;  // 1 MiB
    u32 size_ratio = 10;                   // T
    double bits_per_key = 10.0;
    u32 entries_per_block = 64;            // fence granularity
    bool in_memory = false;                // property-test mode, no files
    std::filesystem::path dir;             // required unless in_memory
};

// Per-lookup counters. Records are per call; the harness aggregates them.
struct LookupStats {
    u64 bloom_probes = 0;      // Bloom filter queries actually made
    u64 bloom_probes_l0 = 0;   // the L0 share of bloom_probes
    u64 bloom_positives = 0;
    u64 bloom_bypasses = 0;    // level probes skipped on a negative prediction
    u64 run_searches = 0;
    u64 block_reads = 0;
    u64 classifier_calls = 0;
    u64 model_accepts = 0;     // learned path: lean model accepted
    u64 backup_probes = 0;     // learned path: backup filter consulted
    u64 backup_hits = 0;       // learned path: backup filter answered maybe
    u64 levels_probed = 0;     // disk levels where a filter/model was consulted
    u64 levels_after_return = 0;
    int found_level = -2;      // -2 absent, -1 memtable, >= 0 disk level

    void merge(const LookupStats& o) {
        bloom_probes += o.bloom_probes;
        bloom_probes_l0 += o.bloom_probes_l0;
        bloom_positives += o.bloom_positives;
        bloom_bypasses += o.bloom_bypasses;
        run_searches += o.run_searches;
        block_reads += o.block_reads;
        classifier_calls += o.classifier_calls;
        model_accepts += o.model_accepts;
        backup_probes += o.backup_probes;
        backup_hits += o.backup_hits;
        levels_probed += o.levels_probed;
        levels_after_return += o.levels_after_return;
    }
};

// Leveled LSM-tree. L0 accumulates raw flush runs (newest last in the
// vector, searched newest-first) up to T runs; levels >= 1 hold exactly one
// run after compaction. Single-writer, single-reader.
class Tree {
  public:
    explicit Tree(TreeConfig config);

    // Reopens a persisted tree from config.dir (reads tree.meta).
    static Tree open(const std::filesystem::path& dir);

    void put(const Key& key, const Value& value);

    // Alg. 3: MemTable, then every level newest to oldest, Bloom-gated.
    std::optional<Value> get_traditional(const Key& key, LookupStats* stats = nullptr) const;

    // Flushes the MemTable into a new L0 run and cascades compaction.
    // No-op precondition: MemTable non-empty.
    void flush();

    // Merges `level`'s runs with level+1's run; cascades while over capacity.
    void compact(std::size_t level);

    const MemTable& memtable() const { return memtable_; }
    const TreeConfig& config() const { return config_; }
    std::size_t level_count() const { return levels_.size(); }
    std::size_t disk_level_count() const;  // levels excluding trailing empties
    const std::vector<std::shared_ptr<Run>>& level_runs(std::size_t level) const {
        return levels_[level].runs;
    }
    u64 level_entries(std::size_t level) const;
    u64 level_epoch(std::size_t level) const { return levels_[level].epoch; }
    u64 memtable_entry_capacity() const { return memtable_.entry_capacity(); }
    // memtable capacity * T^(i+1)
    u64 level_capacity_entries(std::size_t level) const;
    u64 total_entries() const;

    // Visits every record shadow-resolved (newest wins), including the
    // MemTable (level -1). Used for residency labels and test oracles.
    void for_each_resident(const std::function<void(const Key&, const Value&, int level)>& fn) const;

    // Writes tree.meta (config + run file list) into config.dir.
    void save_meta() const;

    // Digest over all run file bytes, order-independent of directory listing.
    u32 fingerprint() const;

    u64 flush_count() const { return flush_count_; }
    u64 compaction_count() const { return compaction_count_; }

    // Non-empty disk levels strictly deeper than `level` (-1 = all).
    u64 nonempty_levels_after(int level) const;

  private:
    struct LevelState {
        std::vector<std::shared_ptr<Run>> runs;  // L0: oldest first, newest at back
        u64 epoch = 0;                           // bumped on any run-set change
    };

    std::shared_ptr<Run> build_run(const std::vector<Entry>& entries);
    std::filesystem::path next_run_path();
    void ensure_level(std::size_t level);
    void maybe_cascade(std::size_t level);

    TreeConfig config_;
    MemTable memtable_;
    std::vector<LevelState> levels_;
    u64 next_run_id_ = 0;
    u64 flush_count_ = 0;
    u64 compaction_count_ = 0;
};

}  // namespace llsm
