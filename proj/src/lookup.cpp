#include "llsm/lookup.hpp"

namespace llsm {

namespace {

// Searches every run of one level newest-first through its Bloom filter.
// Returns the value on a hit.
std::optional<Value> probe_level_bloom(const Tree& tree, std::size_t level, const Key& key,
                                       LookupStats* stats) {
    const auto& runs = tree.level_runs(level);
    for (auto it = runs.rbegin(); it != runs.rend(); ++it) {
        const Run& run = **it;
        if (stats) {
            stats->bloom_probes += 1;
            if (level == 0) stats->bloom_probes_l0 += 1;
        }
        if (!run.bloom().query(key)) continue;
        if (stats) stats->bloom_positives += 1;
        SearchStats ss;
        auto v = run.search(key, &ss);
        if (stats) {
            stats->run_searches += 1;
            stats->block_reads += ss.block_reads;
        }
        if (v) return v;
    }
    return std::nullopt;
}

}  // namespace

std::optional<Value> get_classifier(const Tree& tree, const LevelClassifierSet& models,
                                    const Key& key, LookupStats* stats) {
    if (auto v = tree.memtable().get(key)) {
        if (stats) {
            stats->found_level = -1;
            stats->levels_after_return += tree.nonempty_levels_after(-1);
        }
        return v;
    }

    double rich[45];
    bool have_features = false;

    for (std::size_t level = 0; level < tree.level_count(); ++level) {
        if (tree.level_runs(level).empty()) continue;

        // L0 is always probed: its runs are newest and carry their own
        // filters; classifiers apply to levels >= 1 only.
        if (level >= 1) {
            if (const GbtModel* model = models.model_for(level)) {
                if (!have_features) {
                    extract_rich(key, rich);
                    have_features = true;
                }
                if (stats) stats->classifier_calls += 1;
                if (model->decide(rich) == 0) {
                    if (stats) stats->bloom_bypasses += 1;
                    continue;  // skip the level entirely
                }
            }
        }
        if (stats) stats->levels_probed += 1;
        if (auto v = probe_level_bloom(tree, level, key, stats)) {
            if (stats) {
                stats->found_level = static_cast<int>(level);
                stats->levels_after_return += tree.nonempty_levels_after(static_cast<int>(level));
            }
            return v;
        }
    }
    return std::nullopt;
}

std::optional<Value> get_learned(const Tree& tree, const LearnedFilterSet& filters, const Key& key,
                                 LookupStats* stats) {
    if (auto v = tree.memtable().get(key)) {
        if (stats) {
            stats->found_level = -1;
            stats->levels_after_return += tree.nonempty_levels_after(-1);
        }
        return v;
    }

    double lean[12];
    bool have_features = false;

    for (std::size_t level = 0; level < tree.level_count(); ++level) {
        const auto& runs = tree.level_runs(level);
        if (runs.empty()) continue;

        const LearnedFilter* lf =
            level >= 1 ? filters.fresh_filter_for(level, tree.level_epoch(level)) : nullptr;
        if (lf == nullptr) {
            // L0, or missing/stale sidecar: the level's Bloom filters gate
            // the search as in the traditional path.
            if (stats) stats->levels_probed += 1;
            if (auto v = probe_level_bloom(tree, level, key, stats)) {
                if (stats) {
                    stats->found_level = static_cast<int>(level);
                    stats->levels_after_return +=
                        tree.nonempty_levels_after(static_cast<int>(level));
                }
                return v;
            }
            continue;
        }

        if (!have_features) {
            extract_lean(key, lean);
            have_features = true;
        }
        if (stats) {
            stats->classifier_calls += 1;
            stats->levels_probed += 1;
        }
        bool search_level = false;
        if (lf->model.decide(lean) == 1) {
            if (stats) stats->model_accepts += 1;
            search_level = true;
        } else {
            if (stats) stats->backup_probes += 1;
            if (lf->backup.query(key)) {
                if (stats) stats->backup_hits += 1;
                search_level = true;
            }
        }
        if (!search_level) continue;

        const Run& run = *runs.back();  // levels >= 1 hold exactly one run
        SearchStats ss;
        auto v = run.search(key, &ss);
        if (stats) {
            stats->run_searches += 1;
            stats->block_reads += ss.block_reads;
        }
        if (v) {
            if (stats) {
                stats->found_level = static_cast<int>(level);
                stats->levels_after_return += tree.nonempty_levels_after(static_cast<int>(level));
            }
            return v;
        }
    }
    return std::nullopt;
}

BypassSummary measure_bypass(const LookupStats& aggregated) {
    BypassSummary s;
    s.checks = aggregated.bloom_probes;
    s.bypasses = aggregated.bloom_bypasses;
    if (s.checks + s.bypasses > 0) {
        s.rate_of_total =
            100.0 * static_cast<double>(s.bypasses) / static_cast<double>(s.checks + s.bypasses);
    }
    if (s.checks > 0) {
        s.rate_of_checks = 100.0 * static_cast<double>(s.bypasses) / static_cast<double>(s.checks);
    }
    return s;
}

FnrReport measure_fnr(const Tree& tree, const LevelClassifierSet& models,
                      const std::vector<std::pair<Key, int>>& probe_set) {
    FnrReport r;
    std::map<int, std::pair<u64, u64>> per_level;  // level -> (probed, missed)
    for (const auto& [key, level] : probe_set) {
        auto v = get_classifier(tree, models, key);
        r.probed += 1;
        per_level[level].first += 1;
        if (!v) {
            r.missed += 1;
            per_level[level].second += 1;
        }
    }
    if (r.probed > 0) {
        r.overall = static_cast<double>(r.missed) / static_cast<double>(r.probed);
    }
    for (const auto& [level, counts] : per_level) {
        r.per_level[level] =
            counts.first ? static_cast<double>(counts.second) / static_cast<double>(counts.first)
                         : 0.0;
    }
    return r;
}

}  // namespace llsm
