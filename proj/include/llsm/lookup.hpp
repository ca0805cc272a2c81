#pragma once

#include <map>
#include <optional>
#include <vector>

#include "llsm/gbt.hpp"
#include "llsm/learned_filter.hpp"
#include "llsm/tree.hpp"

namespace llsm {

// Per-level binary classifiers for the filter-skipping read path. Levels
// without a model (for example created by a later compaction) default to
// "always predict 1", which never skips.
class LevelClassifierSet {
  public:
    void attach(std::size_t level, GbtModel model) {
        if (by_level_.size() <= level) by_level_.resize(level + 1);
        by_level_[level] = std::make_unique<GbtModel>(std::move(model));
        ++count_;
    }
    const GbtModel* model_for(std::size_t level) const {
        return level < by_level_.size() ? by_level_[level].get() : nullptr;
    }
    std::size_t size() const { return count_; }

  private:
    std::vector<std::unique_ptr<GbtModel>> by_level_;
    std::size_t count_ = 0;
};

// Alg. 1: MemTable first, L0 runs always Bloom-probed, then per level >= 1
// the classifier decides whether the level's Bloom probe happens at all.
// A negative prediction skips the level entirely; that is the source of
// both the probe savings and any false negatives.
std::optional<Value> get_classifier(const Tree& tree, const LevelClassifierSet& models,
                                    const Key& key, LookupStats* stats = nullptr);

// Per-level learned filters for the sandwich read path. Attachment records
// the level's epoch; a compaction into the level makes the filter stale and
// the level reverts to its runs' Bloom filters until retrained.
class LearnedFilterSet {
  public:
    void attach(std::size_t level, LearnedFilter filter, u64 level_epoch) {
        if (by_level_.size() <= level) by_level_.resize(level + 1);
        by_level_[level] = std::make_unique<Attached>(Attached{std::move(filter), level_epoch});
        ++count_;
    }
    const LearnedFilter* fresh_filter_for(std::size_t level, u64 current_epoch) const {
        if (level >= by_level_.size() || !by_level_[level]) return nullptr;
        const Attached& a = *by_level_[level];
        return a.built_epoch == current_epoch ? &a.filter : nullptr;
    }
    bool stale(std::size_t level, u64 current_epoch) const {
        if (level >= by_level_.size() || !by_level_[level]) return false;
        return by_level_[level]->built_epoch != current_epoch;
    }
    std::size_t size() const { return count_; }
    const LearnedFilter* filter_for(std::size_t level) const {
        return level < by_level_.size() && by_level_[level] ? &by_level_[level]->filter : nullptr;
    }

  private:
    struct Attached {
        LearnedFilter filter;
        u64 built_epoch = 0;
    };
    std::vector<std::unique_ptr<Attached>> by_level_;
    std::size_t count_ = 0;
};

// Alg. 2: MemTable first, L0 runs Bloom-probed, then per level >= 1 the lean
// model answers; on accept the run is searched directly, otherwise the
// backup filter gates the search. Missing or stale filters fall back to the
// level's Bloom filters.
std::optional<Value> get_learned(const Tree& tree, const LearnedFilterSet& filters,
                                 const Key& key, LookupStats* stats = nullptr);

struct BypassSummary {
    u64 checks = 0;    // Bloom probes actually made
    u64 bypasses = 0;  // level probes skipped by prediction
    double rate_of_total = 0.0;   // bypasses / (checks + bypasses) * 100
    double rate_of_checks = 0.0;  // bypasses / checks * 100
};

// Both published bypass-rate definitions; the CSV carries the two columns.
BypassSummary measure_bypass(const LookupStats& aggregated);

struct FnrReport {
    double overall = 0.0;
    std::map<int, double> per_level;       // ground-truth level -> FNR
    u64 probed = 0;
    u64 missed = 0;
};

// probe_set pairs each present key with its ground-truth level recorded at
// probe-set generation time.
FnrReport measure_fnr(const Tree& tree, const LevelClassifierSet& models,
                      const std::vector<std::pair<Key, int>>& probe_set);

}  // namespace llsm
