#include "llsm/workload.hpp"

#include <fstream>
#include <unordered_set>

#include "llsm/io.hpp"

namespace llsm {

void generate_corpus(u64 seed, u64 n_pairs, const std::function<void(const Entry&)>& sink) {
    if (n_pairs < 1) throw std::invalid_argument("corpus: n_pairs must be >= 1");
    SplitMix64 rng(seed);
    std::unordered_set<u128, U128Hash> seen;
    seen.reserve(n_pairs * 2);
    Entry e;
    for (u64 i = 0; i < n_pairs; ++i) {
        // Draw the key first, re-draw on collision, then the value; the
        // stream is a pure function of the seed.
        for (;;) {
            u128 x = rng.next_u128();
            if (seen.insert(x).second) {
                e.key = Key::from_u128(x);
                break;
            }
        }
        u64 words[13];
        for (auto& w : words) w = rng.next();
        std::memcpy(e.value.data(), words, kValueSize);
        sink(e);
    }
}

std::vector<Entry> generate_corpus(u64 seed, u64 n_pairs) {
    std::vector<Entry> out;
    out.reserve(n_pairs);
    generate_corpus(seed, n_pairs, [&](const Entry& e) { out.push_back(e); });
    return out;
}

void write_corpus_file(const std::filesystem::path& path, const std::vector<Entry>& corpus) {
    std::string bytes;
    bytes.reserve(corpus.size() * kEntrySize);
    for (const Entry& e : corpus) {
        bytes.append(reinterpret_cast<const char*>(e.key.data()), kKeySize);
        bytes.append(reinterpret_cast<const char*>(e.value.data()), kValueSize);
    }
    write_file_atomic(path, bytes);
}

std::vector<Entry> read_corpus_file(const std::filesystem::path& path) {
    std::string bytes = read_file(path);
    if (bytes.size() % kEntrySize != 0) throw DataError("corpus: bad record size");
    std::vector<Entry> out(bytes.size() / kEntrySize);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::memcpy(out[i].key.data(), bytes.data() + i * kEntrySize, kKeySize);
        std::memcpy(out[i].value.data(), bytes.data() + i * kEntrySize + kKeySize, kValueSize);
    }
    return out;
}

const char* workload_name(WorkloadKind kind) {
    switch (kind) {
        case WorkloadKind::kRandom: return "random";
        case WorkloadKind::kSequential: return "sequential";
        case WorkloadKind::kLevel0: return "l0";
        case WorkloadKind::kLevel1: return "l1";
        case WorkloadKind::kLevel2: return "l2";
        case WorkloadKind::kLevel3: return "l3";
    }
    return "?";
}

std::optional<WorkloadKind> parse_workload(const std::string& name) {
    if (name == "random") return WorkloadKind::kRandom;
    if (name == "sequential") return WorkloadKind::kSequential;
    if (name == "l0" || name == "level0") return WorkloadKind::kLevel0;
    if (name == "l1" || name == "level1") return WorkloadKind::kLevel1;
    if (name == "l2" || name == "level2") return WorkloadKind::kLevel2;
    if (name == "l3" || name == "level3") return WorkloadKind::kLevel3;
    return std::nullopt;
}

namespace {

Key draw_absent(SplitMix64& rng, const ResidencySnapshot& residency) {
    for (;;) {
        Key k = rng.next_key();
        if (!residency.contains(k)) return k;
    }
}

}  // namespace

std::vector<WorkloadProbe> generate_workload(const WorkloadSpec& spec,
                                             const ResidencySnapshot& residency) {
    std::vector<WorkloadProbe> out;
    out.reserve(spec.n_ops);
    SplitMix64 rng(spec.seed);

    if (spec.kind == WorkloadKind::kSequential) {
        u128 origin = rng.next_u128();
        for (u64 i = 0; i < spec.n_ops; ++i) {
            Key k = Key::from_u128(origin + i);
            out.push_back({k, residency.level(k)});
        }
        return out;
    }

    const std::vector<Key>* present_pool = &residency.all_present;
    int pool_level = -3;
    switch (spec.kind) {
        case WorkloadKind::kLevel0: pool_level = 0; break;
        case WorkloadKind::kLevel1: pool_level = 1; break;
        case WorkloadKind::kLevel2: pool_level = 2; break;
        case WorkloadKind::kLevel3: pool_level = 3; break;
        default: break;
    }
    if (pool_level >= 0) {
        if (static_cast<std::size_t>(pool_level) >= residency.keys_by_level.size() ||
            residency.keys_by_level[static_cast<std::size_t>(pool_level)].empty()) {
            throw DataError(std::string("workload: target level empty: ") +
                            workload_name(spec.kind));
        }
        present_pool = &residency.keys_by_level[static_cast<std::size_t>(pool_level)];
    }

    for (u64 i = 0; i < spec.n_ops; ++i) {
        bool present = rng.next_double() < spec.present_fraction;
        if (present && !present_pool->empty()) {
            const Key& k = (*present_pool)[rng.next_below(present_pool->size())];
            out.push_back({k, residency.level(k)});
        } else {
            out.push_back({draw_absent(rng, residency), -2});
        }
    }
    return out;
}

void write_workload_file(const std::filesystem::path& path, const std::vector<WorkloadProbe>& w) {
    std::string text;
    text.reserve(w.size() * 33);
    for (const WorkloadProbe& p : w) {
        text += p.key.to_hex();
        text += '\n';
    }
    write_file_atomic(path, text);
}

std::vector<Key> read_workload_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<Key> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(Key::from_hex(line));
    }
    return out;
}

}  // namespace llsm
