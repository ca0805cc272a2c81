#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "llsm/bloom.hpp"
#include "llsm/gbt.hpp"
#include "llsm/types.hpp"

namespace llsm {

// Sandwich filter: a lean model answers first; its training-time false
// negatives live in a backup Bloom filter, so every construction positive
// is accepted by model-or-backup.
class LearnedFilter {
  public:
    GbtModel model;
    BloomFilter backup = BloomFilter::sentinel();
    u64 trained_on = 0;  // construction positives
    double delta = 0.0;  // model FNR on its construction positives

    // Membership predicate: model accepts (proba >= tau on LEAN12 features)
    // OR the key is in the backup filter.
    bool query(const Key& key) const;
    bool query_features(const double* lean12, const Key& key) const;

    bool model_accepts(const Key& key) const;

    u64 model_bytes() const { return model.serialized_bytes(); }
    u64 backup_bytes() const { return backup.serialized_bytes(); }

    std::string serialize() const;
    static LearnedFilter deserialize(const std::string& bytes);
    void save(const std::filesystem::path& path) const;
    static LearnedFilter load(const std::filesystem::path& path);
};

struct LearnedBuildOptions {
    GbtHyperparams hyperparams{.n_trees = 4, .max_depth = 2, .learning_rate = 0.1,
                               .min_samples_leaf = 5, .max_bins = 256};
    double backup_bits_per_key = 10.0;  // same policy as the traditional baseline
    double tau = 0.5;
};

// Trains the lean model on positives vs negatives, collects the model's
// false negatives into the backup filter and records delta. Degenerate
// single-class input (no negatives) falls back to a constant-reject model
// with every positive in the backup: still correct, no memory win.
LearnedFilter build_learned_filter(const std::vector<Key>& positives,
                                   const std::vector<Key>& negatives,
                                   const LearnedBuildOptions& options = {});

struct LearnedFilterReport {
    u64 model_bytes = 0;
    u64 backup_bytes = 0;
    u64 traditional_bytes = 0;  // serialized Bloom filter for the same key count
    double reduction_percent = 0.0;
    double delta = 0.0;
};

// Compares serialized sizes against a traditional filter sized for the same
// positives at baseline_bits_per_key.
LearnedFilterReport report_memory(const LearnedFilter& filter, double baseline_bits_per_key);

}  // namespace llsm
