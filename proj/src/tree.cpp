#include "llsm/tree.hpp"

#include <algorithm>
#include <unordered_set>

#include "llsm/hash.hpp"
#include "llsm/io.hpp"

#include <nlohmann/json.hpp>

namespace llsm {

using nlohmann::json;

Tree::Tree(TreeConfig config) : config_(std::move(config)), memtable_(config_.memtable_bytes) {
    if (config_.size_ratio < 2) throw std::invalid_argument("tree: size ratio must be >= 2");
    if (memtable_.entry_capacity() == 0) {
        throw std::invalid_argument("tree: memtable too small for one entry");
    }
    if (!config_.in_memory) {
        if (config_.dir.empty()) throw std::invalid_argument("tree: data directory required");
        std::filesystem::create_directories(config_.dir);
    }
}

void Tree::put(const Key& key, const Value& value) {
    memtable_.put(key, value);
    // Flush as soon as no further entry fits, so a following put never
    // observes a full buffer.
    if (memtable_.full()) flush();
}

void Tree::flush() {
    if (memtable_.empty()) throw DataError("flush: MemTable empty");
    std::vector<Entry> entries = memtable_.sorted_entries();
    // Build the run first; the MemTable is cleared only after the run is
    // durable, so an I/O failure leaves it intact.
    std::shared_ptr<Run> run = build_run(entries);
    memtable_.clear();
    ensure_level(0);
    levels_[0].runs.push_back(std::move(run));
    levels_[0].epoch += 1;
    flush_count_ += 1;
    maybe_cascade(0);
}

std::shared_ptr<Run> Tree::build_run(const std::vector<Entry>& entries) {
    if (config_.in_memory) {
        return Run::build_in_memory(entries, config_.entries_per_block, config_.bits_per_key);
    }
    return Run::build_file(next_run_path(), entries, config_.entries_per_block,
                           config_.bits_per_key);
}

std::filesystem::path Tree::next_run_path() {
    char name[32];
    std::snprintf(name, sizeof(name), "run_%08llu.sst",
                  static_cast<unsigned long long>(next_run_id_++));
    return config_.dir / name;
}

void Tree::ensure_level(std::size_t level) {
    if (levels_.size() <= level) levels_.resize(level + 1);
}

u64 Tree::level_entries(std::size_t level) const {
    u64 total = 0;
    for (const auto& r : levels_[level].runs) total += r->entry_count();
    return total;
}

u64 Tree::total_entries() const {
    u64 total = memtable_.entry_count();
    for (std::size_t i = 0; i < levels_.size(); ++i) total += level_entries(i);
    return total;
}

u64 Tree::level_capacity_entries(std::size_t level) const {
    u64 cap = memtable_.entry_capacity();
    for (std::size_t i = 0; i <= level; ++i) cap *= config_.size_ratio;
    return cap;
}

std::size_t Tree::disk_level_count() const {
    std::size_t n = levels_.size();
    while (n > 0 && levels_[n - 1].runs.empty()) --n;
    return n;
}

void Tree::maybe_cascade(std::size_t level) {
    for (std::size_t i = level; i < levels_.size(); ++i) {
        bool over;
        if (i == 0) {
            over = levels_[0].runs.size() >= config_.size_ratio;
        } else {
            over = level_entries(i) > level_capacity_entries(i);
        }
        if (over) compact(i);
    }
}

void Tree::compact(std::size_t level) {
    ensure_level(level + 1);
    LevelState& src = levels_[level];
    LevelState& dst = levels_[level + 1];
    if (src.runs.empty()) return;

    // Merge sources newest-first: L0's vector holds newest at the back, and
    // the destination run is oldest of all. On duplicate keys the lowest
    // source rank (newest) wins.
    std::vector<std::shared_ptr<Run>> sources;
    for (auto it = src.runs.rbegin(); it != src.runs.rend(); ++it) sources.push_back(*it);
    for (const auto& r : dst.runs) sources.push_back(r);

    u64 upper_bound_entries = 0;
    for (const auto& r : sources) upper_bound_entries += r->entry_count();

    struct Cursor {
        std::vector<Entry> block;
        std::size_t pos = 0;
        u64 next_block = 0;
    };
    std::vector<Cursor> cursors(sources.size());
    auto fill_cursor = [&](std::size_t s) {
        Cursor& c = cursors[s];
        for (;;) {
            if (c.pos < c.block.size()) return true;
            if (c.next_block >= sources[s]->block_count()) return false;
            // Sequential block loads stream each source run once.
            c.pos = 0;
            sources[s]->read_block(c.next_block, c.block);
            c.next_block += 1;
        }
    };

    RunBuilder builder(config_.in_memory ? std::filesystem::path{} : next_run_path(),
                       upper_bound_entries, config_.entries_per_block, config_.bits_per_key);
    try {
        for (;;) {
            std::size_t best = sources.size();
            Key best_key{};
            for (std::size_t s = 0; s < sources.size(); ++s) {
                if (!fill_cursor(s)) continue;
                const Key& k = cursors[s].block[cursors[s].pos].key;
                if (best == sources.size() || k < best_key) {
                    best = s;
                    best_key = k;
                }
            }
            if (best == sources.size()) break;
            builder.add(cursors[best].block[cursors[best].pos]);
            // Advance past this key in every source that carries it; the
            // newest copy (lowest source rank) was just emitted.
            for (std::size_t s = 0; s < sources.size(); ++s) {
                if (!fill_cursor(s)) continue;
                Cursor& c = cursors[s];
                if (c.block[c.pos].key == best_key) c.pos += 1;
            }
        }
    } catch (...) {
        builder.abandon();
        throw;
    }

    std::shared_ptr<Run> merged = builder.finish();

    for (const auto& r : src.runs) r->remove_files();
    for (const auto& r : dst.runs) r->remove_files();
    src.runs.clear();
    dst.runs.clear();
    dst.runs.push_back(std::move(merged));
    src.epoch += 1;
    dst.epoch += 1;
    compaction_count_ += 1;
}

std::optional<Value> Tree::get_traditional(const Key& key, LookupStats* stats) const {
    if (auto v = memtable_.get(key)) {
        if (stats) {
            stats->found_level = -1;
            stats->levels_after_return += nonempty_levels_after(-1);
        }
        return v;
    }
    for (std::size_t level = 0; level < levels_.size(); ++level) {
        const auto& runs = levels_[level].runs;
        if (runs.empty()) continue;
        if (stats) stats->levels_probed += 1;
        // L0 runs searched newest-first; levels >= 1 hold a single run.
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
            if (v) {
                if (stats) {
                    stats->found_level = static_cast<int>(level);
                    stats->levels_after_return += nonempty_levels_after(static_cast<int>(level));
                }
                return v;
            }
        }
    }
    return std::nullopt;
}

u64 Tree::nonempty_levels_after(int level) const {
    u64 n = 0;
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (static_cast<int>(i) > level && !levels_[i].runs.empty()) ++n;
    }
    return n;
}

void Tree::for_each_resident(
    const std::function<void(const Key&, const Value&, int level)>& fn) const {
    // Shadow resolution: emit a key only from its shallowest location.
    std::unordered_set<u128, U128Hash> seen;
    seen.reserve(total_entries());
    for (const auto& [k, v] : memtable_.sorted_entries()) {
        seen.insert(k.to_u128());
        fn(k, v, -1);
    }
    for (std::size_t level = 0; level < levels_.size(); ++level) {
        const auto& runs = levels_[level].runs;
        for (auto it = runs.rbegin(); it != runs.rend(); ++it) {
            (*it)->for_each([&](const Entry& e) {
                if (seen.insert(e.key.to_u128()).second) {
                    fn(e.key, e.value, static_cast<int>(level));
                }
            });
        }
    }
}

void Tree::save_meta() const {
    if (config_.in_memory) throw DataError("save_meta: in-memory tree");
    json meta;
    meta["memtable_bytes"] = config_.memtable_bytes;
    meta["size_ratio"] = config_.size_ratio;
    meta["bits_per_key"] = config_.bits_per_key;
    meta["entries_per_block"] = config_.entries_per_block;
    meta["next_run_id"] = next_run_id_;
    json levels = json::array();
    for (const auto& level : levels_) {
        json files = json::array();
        for (const auto& r : level.runs) files.push_back(r->path().filename().string());
        levels.push_back(files);
    }
    meta["levels"] = levels;
    write_file_atomic(config_.dir / "tree.meta", meta.dump(2));
}

Tree Tree::open(const std::filesystem::path& dir) {
    json meta;
    try {
        meta = json::parse(read_file(dir / "tree.meta"));
    } catch (const json::exception& e) {
        throw DataError("tree.meta parse error: " + std::string(e.what()));
    }
    TreeConfig cfg;
    cfg.memtable_bytes = meta.at("memtable_bytes").get<std::size_t>();
    cfg.size_ratio = meta.at("size_ratio").get<u32>();
    cfg.bits_per_key = meta.at("bits_per_key").get<double>();
    cfg.entries_per_block = meta.at("entries_per_block").get<u32>();
    cfg.dir = dir;
    Tree tree(cfg);
    tree.next_run_id_ = meta.at("next_run_id").get<u64>();
    const json& levels = meta.at("levels");
    tree.levels_.resize(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        for (const auto& name : levels[i]) {
            tree.levels_[i].runs.push_back(Run::open_file(dir / name.get<std::string>()));
        }
    }
    return tree;
}

u32 Tree::fingerprint() const {
    // Digest of run file names and contents in level order.
    Crc32 crc;
    for (std::size_t level = 0; level < levels_.size(); ++level) {
        for (const auto& r : levels_[level].runs) {
            if (r->file_backed()) {
                std::string name = r->path().filename().string();
                crc.update(name.data(), name.size());
                std::string bytes = read_file(r->path());
                crc.update(bytes.data(), bytes.size());
            } else {
                r->for_each([&](const Entry& e) {
                    crc.update(e.key.data(), kKeySize);
                    crc.update(e.value.data(), kValueSize);
                });
            }
        }
    }
    return crc.value();
}

}  // namespace llsm
