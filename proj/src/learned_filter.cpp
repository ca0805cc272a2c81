#include "llsm/learned_filter.hpp"

#include <cmath>

#include "llsm/hash.hpp"
#include "llsm/io.hpp"

namespace llsm {

namespace {
constexpr char kLbfMagic[8] = {'L', 'L', 'S', 'M', 'L', 'B', 'F', '1'};
}

bool LearnedFilter::model_accepts(const Key& key) const {
    double f[12];
    extract_lean(key, f);
    return model.decide(f) == 1;
}

bool LearnedFilter::query(const Key& key) const {
    double f[12];
    extract_lean(key, f);
    return query_features(f, key);
}

bool LearnedFilter::query_features(const double* lean12, const Key& key) const {
    if (model.decide(lean12) == 1) return true;
    return backup.query(key);
}

LearnedFilter build_learned_filter(const std::vector<Key>& positives,
                                   const std::vector<Key>& negatives,
                                   const LearnedBuildOptions& options) {
    if (positives.empty()) throw std::invalid_argument("learned filter: positives required");

    LearnedFilter f;
    f.trained_on = positives.size();

    std::vector<u64> fn_indices;
    if (negatives.empty()) {
        // Degenerate single-class data: constant-reject model, backup holds
        // every positive.
        f.model.schema = FeatureSchema::kLean12;
        f.model.params = options.hyperparams;
        f.model.params.n_trees = 0;
        f.model.initial_score = -100.0;  // constant 0 decision
        f.model.tau = options.tau;
        fn_indices.resize(positives.size());
        for (u64 i = 0; i < positives.size(); ++i) fn_indices[i] = i;
    } else {
        const std::size_t d = feature_count(FeatureSchema::kLean12);
        const std::size_t n = positives.size() + negatives.size();
        std::vector<double> X(n * d);
        std::vector<u8> y(n);
        for (std::size_t i = 0; i < positives.size(); ++i) {
            extract_lean(positives[i], &X[i * d]);
            y[i] = 1;
        }
        for (std::size_t i = 0; i < negatives.size(); ++i) {
            std::size_t row = positives.size() + i;
            extract_lean(negatives[i], &X[row * d]);
            y[row] = 0;
        }
        f.model = train_gbt(FeatureSchema::kLean12, X, y, options.hyperparams);
        f.model.tau = options.tau;

        std::vector<double> Xp(positives.size() * d);
        std::vector<u8> yp(positives.size(), 1);
        for (std::size_t i = 0; i < positives.size(); ++i) {
            std::memcpy(&Xp[i * d], &X[i * d], d * sizeof(double));
        }
        fn_indices = false_negatives(f.model, Xp, yp);
    }

    f.delta = static_cast<double>(fn_indices.size()) / static_cast<double>(positives.size());
    if (fn_indices.empty()) {
        f.backup = BloomFilter::sentinel();
    } else {
        f.backup = BloomFilter::create(fn_indices.size(), options.backup_bits_per_key);
        for (u64 idx : fn_indices) f.backup.insert(positives[idx]);
    }
    return f;
}

LearnedFilterReport report_memory(const LearnedFilter& filter, double baseline_bits_per_key) {
    LearnedFilterReport r;
    r.model_bytes = filter.model_bytes();
    r.backup_bytes = filter.backup_bytes();
    r.delta = filter.delta;
    BloomFilter traditional = BloomFilter::create(std::max<u64>(1, filter.trained_on),
                                                  baseline_bits_per_key);
    r.traditional_bytes = traditional.serialized_bytes();
    r.reduction_percent =
        100.0 * (1.0 - static_cast<double>(r.model_bytes + r.backup_bytes) /
                           static_cast<double>(r.traditional_bytes));
    return r;
}

// Sidecar layout: magic, trained_on u64, delta f64, u64 model blob length +
// model blob (gbt format), u64 backup blob length + backup blob (bf format),
// CRC-32 of everything preceding.
std::string LearnedFilter::serialize() const {
    ByteWriter w;
    w.put_bytes(kLbfMagic, 8);
    w.put_u64(trained_on);
    w.put_f64(delta);
    std::string m = model.serialize();
    w.put_u64(m.size());
    w.put_bytes(m.data(), m.size());
    std::string b = backup.serialize();
    w.put_u64(b.size());
    w.put_bytes(b.data(), b.size());
    std::string payload = w.take();
    u32 crc = crc32(payload.data(), payload.size());
    ByteWriter tail;
    tail.put_u32(crc);
    return payload + tail.bytes();
}

LearnedFilter LearnedFilter::deserialize(const std::string& bytes) {
    if (bytes.size() < 12) throw DataError("learned filter: truncated");
    std::string payload = bytes.substr(0, bytes.size() - 4);
    ByteReader tail(bytes.data() + bytes.size() - 4, 4);
    if (tail.get_u32() != crc32(payload.data(), payload.size())) {
        throw DataError("learned filter: CRC mismatch");
    }
    ByteReader r(payload);
    char magic[8];
    r.get_bytes(magic, 8);
    if (std::memcmp(magic, kLbfMagic, 8) != 0) throw DataError("learned filter: bad magic");
    LearnedFilter f;
    f.trained_on = r.get_u64();
    f.delta = r.get_f64();
    u64 mlen = r.get_u64();
    if (mlen > r.remaining()) throw DataError("learned filter: bad model length");
    std::string m(mlen, '\0');
    r.get_bytes(m.data(), mlen);
    f.model = GbtModel::deserialize(m);
    u64 blen = r.get_u64();
    if (blen > r.remaining()) throw DataError("learned filter: bad backup length");
    std::string b(blen, '\0');
    r.get_bytes(b.data(), blen);
    f.backup = BloomFilter::deserialize(b);
    return f;
}

void LearnedFilter::save(const std::filesystem::path& path) const {
    write_file_atomic(path, serialize());
}

LearnedFilter LearnedFilter::load(const std::filesystem::path& path) {
    return deserialize(read_file(path));
}

}  // namespace llsm
