#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "llsm/bloom.hpp"
#include "llsm/types.hpp"

namespace llsm {

struct FencePointer {
    Key first_key;   // first key of the block
    u64 block_index; // index of the block the fence covers
};

struct SearchStats {
    u64 block_reads = 0;
};

// Immutable sorted run. Two storage modes behind the same interface:
// file-backed (the on-disk SSTable format below) and fully in-memory for
// property tests. A Bloom filter is built alongside at construction.
//
// File layout, all integers little-endian:
//   bytes 0..15   magic "LLSMRUN1" padded with zero bytes to 16
//   bytes 16..23  version (1)
//   bytes 24..31  entry_count
//   entries       entry_count x (16-byte key || 100-byte value), sorted
//   fence block   fence_count u64, then fence_count x (16-byte key || u64 block index)
//   crc           CRC-32 of everything preceding
class Run {
  public:
    static constexpr u64 kVersion = 1;

    // Entries must be strictly sorted with no duplicates.
    static std::shared_ptr<Run> build_in_memory(std::vector<Entry> entries, u32 entries_per_block,
                                                double bits_per_key);
    static std::shared_ptr<Run> build_file(const std::filesystem::path& path,
                                           const std::vector<Entry>& entries,
                                           u32 entries_per_block, double bits_per_key);
    // Opens an existing run file; verifies the CRC and loads fences.
    // The Bloom filter is loaded from the ".bf" sidecar next to the run.
    static std::shared_ptr<Run> open_file(const std::filesystem::path& path);

    ~Run();
    Run(const Run&) = delete;
    Run& operator=(const Run&) = delete;

    u64 entry_count() const { return entry_count_; }
    const Key& min_key() const { return min_key_; }
    const Key& max_key() const { return max_key_; }
    const std::vector<FencePointer>& fence_pointers() const { return fences_; }
    const BloomFilter& bloom() const { return *bloom_; }
    bool file_backed() const { return !path_.empty(); }
    const std::filesystem::path& path() const { return path_; }
    u64 block_count() const { return (entry_count_ + block_entries_ - 1) / block_entries_; }

    // Fence-guided point lookup; reads at most one data block.
    std::optional<Value> search(const Key& key, SearchStats* stats = nullptr) const;

    // Full in-order scan (streams from disk in file mode).
    void for_each(const std::function<void(const Entry&)>& fn) const;

    // Reads one data block (used by streaming merges).
    void read_block(u64 block, std::vector<Entry>& out) const { load_block(block, out); }

    // Removes backing files (run + filter sidecar). The object must not be
    // used afterwards.
    void remove_files();

  private:
    friend class RunBuilder;
    Run() = default;

    void load_block(u64 block, std::vector<Entry>& out) const;

    u64 entry_count_ = 0;
    u32 block_entries_ = 64;
    Key min_key_{};
    Key max_key_{};
    std::vector<FencePointer> fences_;
    std::unique_ptr<BloomFilter> bloom_;

    // in-memory mode
    std::vector<Entry> entries_;

    // file mode
    std::filesystem::path path_;
    int fd_ = -1;
};

// Streaming writer used by flush and compaction: accepts entries in sorted
// order and produces a Run (and its filter sidecar in file mode) without
// holding all entries in memory.
class RunBuilder {
  public:
    // File mode when path is non-empty. n_expected sizes the Bloom filter.
    RunBuilder(std::filesystem::path path, u64 n_expected, u32 entries_per_block,
               double bits_per_key);
    ~RunBuilder();

    void add(const Entry& entry);
    std::shared_ptr<Run> finish();
    void abandon();

  private:
    std::filesystem::path path_;
    std::filesystem::path tmp_path_;
    u32 block_entries_;
    double bits_per_key_;
    u64 count_ = 0;
    bool have_last_ = false;
    Key last_key_{};
    std::vector<FencePointer> fences_;
    std::unique_ptr<BloomFilter> bloom_;
    std::vector<Entry> mem_entries_;  // in-memory mode
    std::FILE* file_ = nullptr;       // file mode
    Crc32 crc_;
};

}  // namespace llsm
