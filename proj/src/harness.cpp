#include "llsm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "llsm/io.hpp"

namespace llsm {

using nlohmann::json;
namespace fs = std::filesystem;

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::kTraditional: return "traditional";
        case Variant::kClassifier: return "classifier";
        case Variant::kLearned: return "learned";
    }
    return "?";
}

std::optional<Variant> parse_variant(const std::string& name) {
    if (name == "t" || name == "traditional") return Variant::kTraditional;
    if (name == "c" || name == "classifier") return Variant::kClassifier;
    if (name == "l" || name == "learned") return Variant::kLearned;
    return std::nullopt;
}

namespace {

fs::path labels_path(const fs::path& dir) { return dir / "labels.bin"; }
fs::path manifest_path(const fs::path& dir) { return dir / "manifest.json"; }

fs::path classifier_path(const fs::path& dir, u32 level) {
    return dir / ("level_" + std::to_string(level) + ".clf");
}
fs::path learned_path(const fs::path& dir, u32 level) {
    return dir / ("level_" + std::to_string(level) + ".lbf");
}

void write_labels(const fs::path& path, const std::vector<std::pair<Key, u32>>& labels) {
    ByteWriter w;
    w.put_u64(labels.size());
    for (const auto& [key, level] : labels) {
        w.put_key(key);
        w.put_u32(level);
    }
    write_file_with_crc(path, w.take());
}

json load_manifest(const fs::path& dir) {
    try {
        return json::parse(read_file(manifest_path(dir)));
    } catch (const json::exception& e) {
        throw DataError("manifest parse error: " + std::string(e.what()));
    }
}

void store_manifest(const fs::path& dir, json manifest) {
    // The digest covers everything except wall-clock fields.
    json digestable = manifest;
    digestable.erase("created");
    digestable.erase("digest");
    std::string canonical = digestable.dump();
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08x", crc32(canonical.data(), canonical.size()));
    manifest["digest"] = buf;
    write_file_atomic(manifest_path(dir), manifest.dump(2));
}

}  // namespace

ResidencySnapshot snapshot_residency(const Tree& tree) {
    ResidencySnapshot snap;
    snap.keys_by_level.resize(std::max<std::size_t>(tree.disk_level_count(), 4));
    snap.all_present.reserve(tree.total_entries());
    snap.level_of.reserve(tree.total_entries() * 2);
    tree.for_each_resident([&](const Key& k, const Value&, int level) {
        snap.all_present.push_back(k);
        snap.level_of.emplace(k.to_u128(), level);
        if (level >= 0) {
            if (snap.keys_by_level.size() <= static_cast<std::size_t>(level)) {
                snap.keys_by_level.resize(static_cast<std::size_t>(level) + 1);
            }
            snap.keys_by_level[static_cast<std::size_t>(level)].push_back(k);
        }
    });
    return snap;
}

LoadSummary cmd_load(const LoadConfig& config) {
    if (config.dir.empty()) throw std::invalid_argument("load: data directory required");
    fs::create_directories(config.dir);
    if (fs::exists(config.dir / "tree.meta")) {
        throw DataError("load: data directory already holds a tree: " + config.dir.string());
    }

    TreeConfig tc;
    tc.memtable_bytes = config.memtable_bytes;
    tc.size_ratio = config.size_ratio;
    tc.bits_per_key = config.bits_per_key;
    tc.entries_per_block = config.entries_per_block;
    tc.dir = config.dir;
    Tree tree(tc);

    generate_corpus(config.seed, config.pairs,
                    [&](const Entry& e) { tree.put(e.key, e.value); });
    // Without a WAL the MemTable would be lost on reopen; flush the tail so
    // every loaded key is disk-resident and labeled.
    if (!tree.memtable().empty()) tree.flush();
    tree.save_meta();

    std::vector<std::pair<Key, u32>> labels;
    labels.reserve(config.pairs);
    tree.for_each_resident([&](const Key& k, const Value&, int level) {
        labels.emplace_back(k, static_cast<u32>(level));
    });
    write_labels(labels_path(config.dir), labels);

    LoadSummary summary;
    summary.pairs = config.pairs;
    summary.flushes = tree.flush_count();
    summary.compactions = tree.compaction_count();
    summary.raw_bytes = config.pairs * kEntrySize;
    for (std::size_t i = 0; i < tree.disk_level_count(); ++i) {
        summary.level_entries.push_back(tree.level_entries(i));
        for (const auto& run : tree.level_runs(i)) {
            summary.disk_bytes += fs::file_size(run->path());
        }
    }
    summary.fingerprint = tree.fingerprint();

    json manifest;
    manifest["created"] = static_cast<u64>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    manifest["corpus_seed"] = config.seed;
    manifest["pairs"] = config.pairs;
    manifest["memtable_bytes"] = config.memtable_bytes;
    manifest["size_ratio"] = config.size_ratio;
    manifest["bits_per_key"] = config.bits_per_key;
    manifest["entries_per_block"] = config.entries_per_block;
    char fp[16];
    std::snprintf(fp, sizeof(fp), "%08x", summary.fingerprint);
    manifest["tree_fingerprint"] = fp;
    manifest["models"] = json::object();
    store_manifest(config.dir, manifest);
    return summary;
}

std::vector<std::pair<Key, u32>> read_labels(const fs::path& path) {
    std::string payload = read_file_with_crc(path);
    ByteReader r(payload);
    u64 count = r.get_u64();
    std::vector<std::pair<Key, u32>> out;
    out.reserve(count);
    for (u64 i = 0; i < count; ++i) {
        Key k = r.get_key();
        u32 level = r.get_u32();
        out.emplace_back(k, level);
    }
    return out;
}

std::string manifest_digest(const fs::path& dir) {
    json manifest = load_manifest(dir);
    if (!manifest.contains("digest")) throw DataError("manifest has no digest");
    return manifest["digest"].get<std::string>();
}

namespace {

struct LevelKeys {
    std::vector<std::vector<Key>> by_level;  // disk levels, index 0 = L0
    std::unordered_map<u128, int, U128Hash> level_of;
    u64 total = 0;
};

LevelKeys collect_level_keys(const fs::path& dir) {
    LevelKeys lk;
    auto labels = read_labels(labels_path(dir));
    lk.total = labels.size();
    lk.level_of.reserve(labels.size() * 2);
    for (const auto& [key, level] : labels) {
        if (lk.by_level.size() <= level) lk.by_level.resize(level + 1);
        lk.by_level[level].push_back(key);
        lk.level_of.emplace(key.to_u128(), static_cast<int>(level));
    }
    return lk;
}

double ratio_for_level(const std::vector<double>& ratios, u32 disk_level) {
    if (ratios.empty()) return 1.0;
    std::size_t idx = disk_level >= 1 ? disk_level - 1 : 0;
    if (idx >= ratios.size()) idx = ratios.size() - 1;
    return ratios[idx];
}

// Deterministic per-(seed, level, purpose) stream.
SplitMix64 derived_rng(u64 seed, u32 level, u32 purpose) {
    return SplitMix64(seed ^ (0x9E3779B97F4A7C15ULL * (level + 1)) ^
                      (0xC2B2AE3D27D4EB4FULL * purpose));
}

std::vector<Key> sample_keys(const std::vector<Key>& pool, u64 want, SplitMix64& rng) {
    std::vector<Key> out;
    out.reserve(want);
    if (pool.empty()) return out;
    // With replacement once the request exceeds the pool.
    if (want >= pool.size()) {
        for (u64 i = 0; i < want; ++i) out.push_back(pool[rng.next_below(pool.size())]);
        return out;
    }
    // Partial Fisher-Yates over an index array.
    std::vector<u64> idx(pool.size());
    for (u64 i = 0; i < pool.size(); ++i) idx[i] = i;
    for (u64 i = 0; i < want; ++i) {
        u64 j = i + rng.next_below(pool.size() - i);
        std::swap(idx[i], idx[j]);
        out.push_back(pool[idx[i]]);
    }
    return out;
}

std::vector<Key> draw_absent_keys(u64 want, const LevelKeys& lk, SplitMix64& rng) {
    std::vector<Key> out;
    out.reserve(want);
    while (out.size() < want) {
        Key k = rng.next_key();
        if (lk.level_of.find(k.to_u128()) == lk.level_of.end()) out.push_back(k);
    }
    return out;
}

}  // namespace

std::vector<TrainedLevelInfo> cmd_train(const TrainConfig& config) {
    json manifest = load_manifest(config.dir);
    u64 seed = manifest.at("corpus_seed").get<u64>();
    LevelKeys lk = collect_level_keys(config.dir);

    std::vector<TrainedLevelInfo> out;
    for (u32 level = 1; level < lk.by_level.size(); ++level) {
        const std::vector<Key>& level_keys = lk.by_level[level];
        if (level_keys.empty()) {
            std::fprintf(stderr, "train: level %u empty, skipped\n", level);
            continue;
        }
        TrainedLevelInfo info;
        info.level = level;

        if (config.mode == TrainMode::kClassifier) {
            // Positives: the level's keys, subsampled when the level is
            // large. Negatives: an equal-count sample of other-level keys
            // plus fresh absent keys, both scaled by the ratio.
            SplitMix64 rng = derived_rng(seed, level, 1);
            std::vector<Key> positives = level_keys;
            if (positives.size() > config.subsample_threshold) {
                u64 want = static_cast<u64>(
                    std::llround(static_cast<double>(positives.size()) *
                                 config.subsample_percent / 100.0));
                positives = sample_keys(positives, want, rng);
            }
            double ratio = ratio_for_level(config.neg_ratio, level);
            u64 n_other = static_cast<u64>(
                std::llround(static_cast<double>(positives.size()) * ratio));
            u64 n_absent = n_other;

            std::vector<Key> others;
            others.reserve(lk.total - level_keys.size());
            for (u32 l = 0; l < lk.by_level.size(); ++l) {
                if (l == level) continue;
                others.insert(others.end(), lk.by_level[l].begin(), lk.by_level[l].end());
            }
            std::vector<Key> other_sample = sample_keys(others, n_other, rng);
            std::vector<Key> absent_sample = draw_absent_keys(n_absent, lk, rng);

            const std::size_t d = feature_count(FeatureSchema::kRich45);
            std::size_t n = positives.size() + other_sample.size() + absent_sample.size();
            std::vector<double> X(n * d);
            std::vector<u8> y(n, 0);
            std::size_t row = 0;
            for (const Key& k : positives) {
                extract_rich(k, &X[row * d]);
                y[row++] = 1;
            }
            for (const Key& k : other_sample) extract_rich(k, &X[row++ * d]);
            for (const Key& k : absent_sample) extract_rich(k, &X[row++ * d]);

            GbtModel model = train_gbt(FeatureSchema::kRich45, X, y, config.classifier_params);
            info.positives = positives.size();
            info.train_rows = n;
            info.file = classifier_path(config.dir, level);
            model.save(info.file);
            info.model_bytes = fs::file_size(info.file);
        } else {
            // Learned filters must cover every resident key: no subsampling.
            SplitMix64 rng = derived_rng(seed, level, 2);
            u64 n_neg = static_cast<u64>(std::llround(
                static_cast<double>(level_keys.size()) * config.lean_negatives_per_positive));
            std::vector<Key> negatives = draw_absent_keys(n_neg, lk, rng);

            LearnedBuildOptions opts;
            opts.hyperparams = config.lean_params;
            LearnedFilter filter = build_learned_filter(level_keys, negatives, opts);

            // Zero-false-negative verification pass gates file acceptance.
            for (const Key& k : level_keys) {
                if (!filter.query(k)) {
                    throw CorrectnessError("learned filter failed zero-FN replay at level " +
                                           std::to_string(level));
                }
            }
            info.positives = level_keys.size();
            info.train_rows = level_keys.size() + negatives.size();
            info.delta = filter.delta;
            info.model_bytes = filter.model_bytes();
            info.backup_bytes = filter.backup_bytes();
            info.file = learned_path(config.dir, level);
            filter.save(info.file);
        }
        out.push_back(info);
    }

    json& models = manifest["models"];
    for (const TrainedLevelInfo& info : out) {
        std::string bytes = read_file(info.file);
        char digest[16];
        std::snprintf(digest, sizeof(digest), "%08x", crc32(bytes.data(), bytes.size()));
        models[info.file.filename().string()] = digest;
    }
    store_manifest(config.dir, manifest);
    return out;
}

namespace {

struct VariantRunner {
    Variant variant;
    const Tree* tree = nullptr;
    const LevelClassifierSet* classifiers = nullptr;
    const LearnedFilterSet* filters = nullptr;

    std::optional<Value> get(const Key& key, LookupStats* stats) const {
        switch (variant) {
            case Variant::kTraditional: return tree->get_traditional(key, stats);
            case Variant::kClassifier: return get_classifier(*tree, *classifiers, key, stats);
            case Variant::kLearned: return get_learned(*tree, *filters, key, stats);
        }
        return std::nullopt;
    }
};

std::string join_u64(const std::vector<u64>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(values[i]);
    }
    return out;
}

double percentile(std::vector<double> sorted, double p) {
    if (sorted.empty()) return 0;
    double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(rank);
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = rank - static_cast<double>(lo);
    return sorted[lo] * (1 - frac) + sorted[hi] * frac;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

BenchResult cmd_bench(const BenchConfig& config) {
    Tree tree = Tree::open(config.dir);
    json manifest = load_manifest(config.dir);
    u64 corpus_seed = manifest.at("corpus_seed").get<u64>();
    u64 pairs = manifest.at("pairs").get<u64>();
    std::string digest = manifest.at("digest").get<std::string>();

    // Reference map for the correctness gate.
    std::unordered_map<u128, Value, U128Hash> reference;
    reference.reserve(pairs * 2);
    generate_corpus(corpus_seed, pairs, [&](const Entry& e) {
        reference[e.key.to_u128()] = e.value;
    });

    bool need_classifier = false, need_learned = false;
    for (Variant v : config.variants) {
        need_classifier |= v == Variant::kClassifier;
        need_learned |= v == Variant::kLearned;
    }

    LevelClassifierSet classifiers;
    LearnedFilterSet filters;
    std::vector<u64> clf_bytes_per_level, lbf_model_bytes, lbf_backup_bytes;
    std::vector<u64> filter_bytes_per_level;
    for (std::size_t level = 0; level < tree.disk_level_count(); ++level) {
        u64 bytes = 0;
        for (const auto& run : tree.level_runs(level)) bytes += run->bloom().serialized_bytes();
        filter_bytes_per_level.push_back(bytes);
        clf_bytes_per_level.push_back(0);
        lbf_model_bytes.push_back(0);
        lbf_backup_bytes.push_back(0);
    }
    for (u32 level = 1; level < tree.disk_level_count(); ++level) {
        if (tree.level_runs(level).empty()) continue;  // nothing to gate
        if (need_classifier) {
            fs::path p = classifier_path(config.dir, level);
            if (!fs::exists(p)) {
                throw DataError("bench: missing classifier model " + p.string());
            }
            classifiers.attach(level, GbtModel::load(p));
            clf_bytes_per_level[level] = fs::file_size(p);
        }
        if (need_learned) {
            fs::path p = learned_path(config.dir, level);
            if (!fs::exists(p)) {
                throw DataError("bench: missing learned filter " + p.string());
            }
            LearnedFilter lf = LearnedFilter::load(p);
            lbf_model_bytes[level] = lf.model_bytes();
            lbf_backup_bytes[level] = lf.backup_bytes();
            filters.attach(level, std::move(lf), tree.level_epoch(level));
        }
    }

    ResidencySnapshot residency = snapshot_residency(tree);

    fs::path out_dir = config.out_csv.empty() ? fs::path{} : config.out_csv.parent_path();
    if (!out_dir.empty()) fs::create_directories(out_dir);

    BenchResult result;
    u64 workload_index = 0;
    for (WorkloadKind kind : config.workloads) {
        WorkloadSpec spec;
        spec.kind = kind;
        spec.n_ops = config.n_ops;
        spec.seed = config.workload_seed + 1000 * workload_index;
        spec.present_fraction = config.present_fraction;
        ++workload_index;
        std::vector<WorkloadProbe> probes = generate_workload(spec, residency);
        if (!config.out_csv.empty()) {
            fs::path wf = config.out_csv.parent_path() /
                          ("workload_" + std::string(workload_name(kind)) + ".keys");
            write_workload_file(wf, probes);
        }

        struct VariantState {
            VariantRunner runner;
            MetricsRow row;
            LookupStats agg;
            u64 missed_present = 0;
            u64 correct = 0;
            std::map<int, std::pair<u64, u64>> fnr_by_level;  // level -> (present, missed)
        };
        std::vector<VariantState> states;
        for (Variant variant : config.variants) {
            VariantState s{VariantRunner{variant, &tree, &classifiers, &filters}, {}, {}, 0, 0, {}};
            s.row.workload = workload_name(kind);
            s.row.variant = variant_name(variant);
            s.row.n_ops = probes.size();
            s.row.manifest_digest = digest;
            s.row.per_op_us.reserve(probes.size());
            states.push_back(std::move(s));

            // Untimed warmup over the same key sequence.
            for (const WorkloadProbe& p : probes) {
                LookupStats stats;
                (void)states.back().runner.get(p.key, &stats);
            }
        }

        // Timed passes interleave in blocks so that background interference
        // lands on every variant of a workload roughly equally; each variant
        // still executes the identical key sequence in order.
        constexpr std::size_t kTimedBlock = 200;
        for (std::size_t begin = 0; begin < probes.size(); begin += kTimedBlock) {
            std::size_t end = std::min(begin + kTimedBlock, probes.size());
            for (VariantState& s : states) {
                for (std::size_t i = begin; i < end; ++i) {
                    const WorkloadProbe& p = probes[i];
                    LookupStats stats;
                    auto t0 = std::chrono::steady_clock::now();
                    std::optional<Value> v = s.runner.get(p.key, &stats);
                    auto t1 = std::chrono::steady_clock::now();
                    s.row.per_op_us.push_back(
                        std::chrono::duration<double, std::micro>(t1 - t0).count());
                    s.agg.merge(stats);

                    auto ref = reference.find(p.key.to_u128());
                    if (v) {
                        if (ref == reference.end() || !(ref->second == *v)) {
                            s.row.wrong_values += 1;
                            throw CorrectnessError("bench: wrong value returned for key " +
                                                   p.key.to_hex() + " (" + s.row.variant + ", " +
                                                   s.row.workload + ")");
                        }
                        s.correct += 1;
                    } else {
                        if (ref != reference.end()) {
                            s.missed_present += 1;
                            s.fnr_by_level[p.ground_truth_level].second += 1;
                        } else {
                            s.correct += 1;
                        }
                    }
                    if (ref != reference.end()) s.fnr_by_level[p.ground_truth_level].first += 1;
                }
            }
        }

        for (VariantState& s : states) {
            MetricsRow& row = s.row;
            u64 present_total = 0;
            for (auto& [level, counts] : s.fnr_by_level) present_total += counts.first;
            row.fnr_overall = present_total
                                  ? static_cast<double>(s.missed_present) /
                                        static_cast<double>(present_total)
                                  : 0.0;
            for (int l = 0; l < 4; ++l) {
                auto it = s.fnr_by_level.find(l);
                row.fnr_level[l] =
                    (it != s.fnr_by_level.end() && it->second.first)
                        ? static_cast<double>(it->second.second) /
                              static_cast<double>(it->second.first)
                        : 0.0;
            }
            row.accuracy = static_cast<double>(s.correct) / static_cast<double>(probes.size());

            BypassSummary bypass = measure_bypass(s.agg);
            row.bloom_checks = bypass.checks;
            row.bloom_bypasses = bypass.bypasses;
            row.bypass_rate_of_total = bypass.rate_of_total;
            row.bypass_rate_of_checks = bypass.rate_of_checks;
            row.run_searches = s.agg.run_searches;
            row.bloom_probes_l0 = s.agg.bloom_probes_l0;
            row.backup_probes = s.agg.backup_probes;
            row.backup_hits = s.agg.backup_hits;

            std::vector<double> sorted = row.per_op_us;
            std::sort(sorted.begin(), sorted.end());
            double sum = 0;
            for (double t : sorted) sum += t;
            row.avg_us = sum / static_cast<double>(sorted.size());
            row.p50_us = percentile(sorted, 50);
            row.p99_us = percentile(sorted, 99);

            row.filter_bytes_per_level = join_u64(filter_bytes_per_level);
            switch (s.runner.variant) {
                case Variant::kTraditional:
                    row.model_bytes_per_level = join_u64(std::vector<u64>(
                        filter_bytes_per_level.size(), 0));
                    row.backup_bytes_per_level = row.model_bytes_per_level;
                    break;
                case Variant::kClassifier:
                    row.model_bytes_per_level = join_u64(clf_bytes_per_level);
                    row.backup_bytes_per_level = join_u64(std::vector<u64>(
                        filter_bytes_per_level.size(), 0));
                    break;
                case Variant::kLearned:
                    row.model_bytes_per_level = join_u64(lbf_model_bytes);
                    row.backup_bytes_per_level = join_u64(lbf_backup_bytes);
                    break;
            }
            result.rows.push_back(std::move(row));
        }
    }

    // Per-filter probe timing (level-resolved, random keys): the traditional
    // Bloom query versus the learned-filter query.
    {
        SplitMix64 rng(1234);
        std::vector<Key> keys(20000);
        for (Key& k : keys) k = rng.next_key();
        for (u32 level = 1; level < tree.disk_level_count(); ++level) {
            const auto& runs = tree.level_runs(level);
            if (runs.empty()) continue;
            const Run& run = *runs.back();
            volatile bool sink = false;
            auto t0 = std::chrono::steady_clock::now();
            for (const Key& k : keys) sink = sink ^ run.bloom().query(k);
            auto t1 = std::chrono::steady_clock::now();
            result.filter_probe_us[level] =
                std::chrono::duration<double, std::micro>(t1 - t0).count() /
                static_cast<double>(keys.size());
            if (const LearnedFilter* lf = filters.filter_for(level)) {
                auto t2 = std::chrono::steady_clock::now();
                for (const Key& k : keys) sink = sink ^ lf->query(k);
                auto t3 = std::chrono::steady_clock::now();
                result.learned_probe_us[level] =
                    std::chrono::duration<double, std::micro>(t3 - t2).count() /
                    static_cast<double>(keys.size());
            }
            (void)sink;
        }
    }

    if (!config.out_csv.empty()) {
        std::ostringstream csv;
        csv << kCsvHeader << "\n";
        for (const MetricsRow& r : result.rows) {
            csv << r.workload << ',' << r.variant << ',' << r.n_ops << ','
                << format_double(r.avg_us) << ',' << format_double(r.p50_us) << ','
                << format_double(r.p99_us) << ',' << r.bloom_checks << ',' << r.bloom_bypasses
                << ',' << format_double(r.bypass_rate_of_total) << ','
                << format_double(r.bypass_rate_of_checks) << ',' << format_double(r.fnr_overall);
            for (int l = 0; l < 4; ++l) csv << ',' << format_double(r.fnr_level[l]);
            csv << ',' << format_double(r.accuracy) << ',' << r.filter_bytes_per_level << ','
                << r.model_bytes_per_level << ',' << r.backup_bytes_per_level << ','
                << r.manifest_digest << "\n";
        }
        write_file_atomic(config.out_csv, csv.str());

        if (config.write_traces) {
            for (const MetricsRow& r : result.rows) {
                std::ostringstream trace;
                trace << "op_index,variant,us\n";
                for (std::size_t i = 0; i < r.per_op_us.size(); ++i) {
                    trace << i << ',' << r.variant << ',' << format_double(r.per_op_us[i]) << "\n";
                }
                fs::path tp = config.out_csv.parent_path() /
                              ("trace_" + r.workload + "_" + r.variant + ".csv");
                write_file_atomic(tp, trace.str());
            }
        }

        std::ostringstream ft;
        ft << "level,bloom_query_us,learned_query_us\n";
        for (const auto& [level, us] : result.filter_probe_us) {
            ft << level << ',' << format_double(us) << ',';
            auto it = result.learned_probe_us.find(level);
            ft << (it != result.learned_probe_us.end() ? format_double(it->second) : "");
            ft << "\n";
        }
        write_file_atomic(config.out_csv.parent_path() / "filter_times.csv", ft.str());

        // Backup utilization: how often lookups reached the backup filter
        // versus how often it answered maybe; plus the L0/deeper split of
        // the Bloom probes.
        std::ostringstream bu;
        bu << "workload,variant,backup_probes,backup_hits,bloom_probes_l0,bloom_probes_deeper\n";
        for (const MetricsRow& r : result.rows) {
            bu << r.workload << ',' << r.variant << ',' << r.backup_probes << ','
               << r.backup_hits << ',' << r.bloom_probes_l0 << ','
               << (r.bloom_checks - r.bloom_probes_l0) << "\n";
        }
        write_file_atomic(config.out_csv.parent_path() / "backup_utilization.csv", bu.str());
    }
    return result;
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

void cmd_report(const fs::path& csv_path, const fs::path& out_dir) {
    auto rows = read_csv(csv_path);
    if (rows.empty() || rows[0].empty() || rows[0][0] != "workload") {
        throw DataError("report: malformed CSV " + csv_path.string());
    }
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < rows[0].size(); ++i) col[rows[0][i]] = i;
    for (const char* required : {"workload", "variant", "avg_us", "filter_bytes_per_level",
                                 "model_bytes_per_level", "backup_bytes_per_level"}) {
        if (!col.count(required)) throw DataError("report: missing column " + std::string(required));
    }
    fs::create_directories(out_dir);

    // Latency bars: workload, variant, avg_us.
    {
        std::ostringstream out;
        out << "workload variant avg_us\n";
        for (std::size_t i = 1; i < rows.size(); ++i) {
            out << rows[i][col["workload"]] << ' ' << rows[i][col["variant"]] << ' '
                << rows[i][col["avg_us"]] << "\n";
        }
        write_file_atomic(out_dir / "fig_latency.dat", out.str());
    }

    // Speedup bars vs traditional on the same workload.
    {
        std::map<std::string, double> trad;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i][col["variant"]] == "traditional") {
                trad[rows[i][col["workload"]]] = std::stod(rows[i][col["avg_us"]]);
            }
        }
        std::ostringstream out;
        out << "workload variant speedup\n";
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const std::string& variant = rows[i][col["variant"]];
            if (variant == "traditional") continue;
            const std::string& workload = rows[i][col["workload"]];
            double us = std::stod(rows[i][col["avg_us"]]);
            if (trad.count(workload) && us > 0) {
                out << workload << ' ' << variant << ' ' << format_double(trad[workload] / us)
                    << "\n";
            }
        }
        write_file_atomic(out_dir / "fig_speedup.dat", out.str());
    }

    // Memory per level: traditional filter vs model + backup.
    {
        std::ostringstream out;
        out << "variant level filter_bytes model_bytes backup_bytes\n";
        std::set<std::string> emitted;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const std::string& variant = rows[i][col["variant"]];
            if (!emitted.insert(variant).second) continue;
            auto split = [](const std::string& s) {
                std::vector<std::string> parts;
                std::string part;
                std::istringstream ss(s);
                while (std::getline(ss, part, ';')) parts.push_back(part);
                return parts;
            };
            auto fb = split(rows[i][col["filter_bytes_per_level"]]);
            auto mb = split(rows[i][col["model_bytes_per_level"]]);
            auto bb = split(rows[i][col["backup_bytes_per_level"]]);
            for (std::size_t l = 0; l < fb.size(); ++l) {
                out << variant << ' ' << l << ' ' << fb[l] << ' '
                    << (l < mb.size() ? mb[l] : "0") << ' ' << (l < bb.size() ? bb[l] : "0")
                    << "\n";
            }
        }
        write_file_atomic(out_dir / "fig_memory.dat", out.str());
    }

    // Per-operation latency traces (one file per workload).
    {
        std::set<std::string> workloads;
        for (std::size_t i = 1; i < rows.size(); ++i) workloads.insert(rows[i][col["workload"]]);
        for (const std::string& w : workloads) {
            std::ostringstream out;
            out << "op_index variant us\n";
            for (std::size_t i = 1; i < rows.size(); ++i) {
                if (rows[i][col["workload"]] != w) continue;
                fs::path tp = csv_path.parent_path() /
                              ("trace_" + w + "_" + rows[i][col["variant"]] + ".csv");
                if (!fs::exists(tp)) continue;
                auto trace = read_csv(tp);
                for (std::size_t j = 1; j < trace.size(); ++j) {
                    out << trace[j][0] << ' ' << trace[j][1] << ' ' << trace[j][2] << "\n";
                }
            }
            write_file_atomic(out_dir / ("fig_perop_" + w + ".dat"), out.str());
        }
    }

    // Per-filter query times, when the bench emitted them.
    {
        fs::path ft = csv_path.parent_path() / "filter_times.csv";
        if (fs::exists(ft)) {
            auto t = read_csv(ft);
            std::ostringstream out;
            out << "level bloom_query_us learned_query_us\n";
            for (std::size_t i = 1; i < t.size(); ++i) {
                out << t[i][0] << ' ' << t[i][1] << ' ' << (t[i].size() > 2 ? t[i][2] : "")
                    << "\n";
            }
            write_file_atomic(out_dir / "fig_filter_time.dat", out.str());
        }
    }
}

}  // namespace llsm
