#include "llsm/gbt.hpp"

#include <algorithm>
#include <cmath>

#include "llsm/hash.hpp"
#include "llsm/io.hpp"

namespace llsm {

namespace {
constexpr char kGbtMagic[8] = {'L', 'L', 'S', 'M', 'G', 'B', 'T', '1'};
constexpr double kLeafClamp = 4.0;
constexpr double kMinGain = 1e-12;
}  // namespace

double sigmoid(double z) {
    // Evaluate through exp of a non-positive argument; saturates, never NaN.
    if (z >= 0) {
        double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

double logistic_loss(double y, double yhat) {
    constexpr double eps = 1e-12;
    double p = std::min(1.0 - eps, std::max(eps, yhat));
    return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

double GbtModel::predict_proba(const double* x) const {
    double score = 0.0;
    for (const RegressionTree& t : trees) score += t.predict(x);
    return sigmoid(initial_score + params.learning_rate * score);
}

double GbtModel::predict_proba(const FeatureVector& v) const {
    if (v.schema != schema || v.values.size() != feature_count(schema)) {
        throw std::invalid_argument(std::string("feature schema mismatch: model expects ") +
                                    schema_name(schema));
    }
    return predict_proba(v.values.data());
}

namespace {

// Boosting trainer over globally pre-binned features. Candidate thresholds
// per feature are midpoints of sorted unique values, reduced to at most
// max_bins - 1 quantile cuts when there are more uniques than bins.
class Trainer {
  public:
    Trainer(FeatureSchema schema, const std::vector<double>& X, const std::vector<u8>& y,
            const GbtHyperparams& hp)
        : schema_(schema), hp_(hp), x_(X), y_(y), d_(feature_count(schema)), n_(y.size()) {
        if (n_ < 2) throw std::invalid_argument("gbt: need at least 2 samples");
        if (x_.size() != n_ * d_) throw std::invalid_argument("gbt: X/y size mismatch");
        std::size_t pos = 0;
        for (u8 v : y_) pos += v ? 1 : 0;
        if (pos == 0 || pos == n_) {
            throw std::invalid_argument(
                "gbt: single-class training set; fit a constant model instead");
        }
        base_rate_ = static_cast<double>(pos) / static_cast<double>(n_);
        if (hp_.max_bins < 2) hp_.max_bins = 2;
        if (hp_.max_bins > 256) hp_.max_bins = 256;
        if (hp_.min_samples_leaf < 1) hp_.min_samples_leaf = 1;
    }

    GbtModel run(TrainReport* report) {
        bin_features();

        GbtModel model;
        model.schema = schema_;
        model.params = hp_;
        model.initial_score = std::log(base_rate_ / (1.0 - base_rate_));
        model.trees.reserve(hp_.n_trees);

        score_.assign(n_, model.initial_score);
        residual_.assign(n_, 0.0);
        hessian_.assign(n_, 0.0);
        order_.resize(n_);

        for (u32 t = 0; t < hp_.n_trees; ++t) {
            for (std::size_t i = 0; i < n_; ++i) {
                double p = sigmoid(score_[i]);
                residual_[i] = static_cast<double>(y_[i]) - p;
                hessian_[i] = p * (1.0 - p);
            }
            for (std::size_t i = 0; i < n_; ++i) order_[i] = static_cast<u32>(i);

            RegressionTree tree;
            build_node(tree, 0, n_, 0, model.params.learning_rate);
            model.trees.push_back(std::move(tree));

            if (report) {
                double loss = 0.0;
                for (std::size_t i = 0; i < n_; ++i) {
                    loss += logistic_loss(y_[i], sigmoid(score_[i]));
                }
                report->loss_per_round.push_back(loss / static_cast<double>(n_));
            }
        }
        return model;
    }

  private:
    void bin_features() {
        thresholds_.resize(d_);
        bins_.assign(n_ * d_, 0);
        std::vector<double> col(n_);
        for (std::size_t j = 0; j < d_; ++j) {
            for (std::size_t i = 0; i < n_; ++i) col[i] = x_[i * d_ + j];
            std::vector<double> sorted = col;
            std::sort(sorted.begin(), sorted.end());

            std::vector<double> uniq;
            uniq.reserve(sorted.size());
            for (double v : sorted) {
                if (uniq.empty() || v != uniq.back()) uniq.push_back(v);
            }

            std::vector<double>& thr = thresholds_[j];
            thr.clear();
            const std::size_t max_thr = hp_.max_bins - 1;
            if (uniq.size() <= hp_.max_bins) {
                for (std::size_t u = 0; u + 1 < uniq.size(); ++u) {
                    thr.push_back(uniq[u] + (uniq[u + 1] - uniq[u]) / 2.0);
                }
            } else {
                for (std::size_t b = 1; b <= max_thr; ++b) {
                    std::size_t r = b * n_ / (max_thr + 1);
                    if (r == 0 || r >= n_) continue;
                    double lo = sorted[r - 1], hi = sorted[r];
                    if (lo < hi) {
                        double mid = lo + (hi - lo) / 2.0;
                        if (thr.empty() || mid > thr.back()) thr.push_back(mid);
                    }
                }
            }
            for (std::size_t i = 0; i < n_; ++i) {
                auto it = std::upper_bound(thr.begin(), thr.end(), col[i]);
                bins_[i * d_ + j] = static_cast<u8>(it - thr.begin());
            }
        }
        hist_count_.resize(d_ * 256);
        hist_sum_.resize(d_ * 256);
    }

    u32 build_node(RegressionTree& tree, std::size_t begin, std::size_t end, u32 depth,
                   double learning_rate) {
        const std::size_t count = end - begin;
        double sum_r = 0.0;
        for (std::size_t s = begin; s < end; ++s) sum_r += residual_[order_[s]];

        bool make_leaf = depth >= hp_.max_depth || count < 2 * hp_.min_samples_leaf;

        std::size_t best_feature = 0;
        std::size_t best_bin = 0;
        double best_gain = kMinGain;
        if (!make_leaf) {
            std::fill(hist_count_.begin(), hist_count_.end(), 0);
            std::fill(hist_sum_.begin(), hist_sum_.end(), 0.0);
            for (std::size_t s = begin; s < end; ++s) {
                const u32 i = order_[s];
                const u8* row = &bins_[static_cast<std::size_t>(i) * d_];
                const double r = residual_[i];
                for (std::size_t j = 0; j < d_; ++j) {
                    const std::size_t cell = j * 256 + row[j];
                    hist_count_[cell] += 1;
                    hist_sum_[cell] += r;
                }
            }
            const double parent = sum_r * sum_r / static_cast<double>(count);
            bool found = false;
            for (std::size_t j = 0; j < d_; ++j) {
                const std::size_t nthr = thresholds_[j].size();
                if (nthr == 0) continue;
                u64 nl = 0;
                double sl = 0.0;
                for (std::size_t b = 0; b < nthr; ++b) {
                    nl += hist_count_[j * 256 + b];
                    sl += hist_sum_[j * 256 + b];
                    const u64 nr = count - nl;
                    if (nl < hp_.min_samples_leaf) continue;
                    if (nr < hp_.min_samples_leaf) break;
                    const double sr = sum_r - sl;
                    const double gain = sl * sl / static_cast<double>(nl) +
                                        sr * sr / static_cast<double>(nr) - parent;
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_feature = j;
                        best_bin = b;
                        found = true;
                    }
                }
            }
            make_leaf = !found;
        }

        const u32 node_id = static_cast<u32>(tree.nodes.size());
        tree.nodes.emplace_back();
        if (make_leaf) {
            double sum_h = 0.0;
            for (std::size_t s = begin; s < end; ++s) sum_h += hessian_[order_[s]];
            double value = sum_r / std::max(sum_h, 1e-12);
            value = std::min(kLeafClamp, std::max(-kLeafClamp, value));
            TreeNode& leaf = tree.nodes[node_id];
            leaf.is_leaf = 1;
            leaf.value = value;
            for (std::size_t s = begin; s < end; ++s) {
                score_[order_[s]] += learning_rate * value;
            }
            return node_id;
        }

        const u16 feature = static_cast<u16>(best_feature);
        const u8 split_bin = static_cast<u8>(best_bin);
        auto mid_it = std::stable_partition(
            order_.begin() + static_cast<std::ptrdiff_t>(begin),
            order_.begin() + static_cast<std::ptrdiff_t>(end),
            [&](u32 i) { return bins_[static_cast<std::size_t>(i) * d_ + feature] <= split_bin; });
        const std::size_t mid = static_cast<std::size_t>(mid_it - order_.begin());

        // Histograms are rebuilt per node, so recurse after partitioning.
        const u32 left = build_node(tree, begin, mid, depth + 1, learning_rate);
        const u32 right = build_node(tree, mid, end, depth + 1, learning_rate);
        TreeNode& node = tree.nodes[node_id];
        node.is_leaf = 0;
        node.feature = feature;
        node.threshold = thresholds_[best_feature][best_bin];
        node.left = left;
        node.right = right;
        return node_id;
    }

    FeatureSchema schema_;
    GbtHyperparams hp_;
    const std::vector<double>& x_;
    const std::vector<u8>& y_;
    std::size_t d_;
    std::size_t n_;
    double base_rate_ = 0.5;

    std::vector<std::vector<double>> thresholds_;
    std::vector<u8> bins_;
    std::vector<double> score_;
    std::vector<double> residual_;
    std::vector<double> hessian_;
    std::vector<u32> order_;
    std::vector<u64> hist_count_;
    std::vector<double> hist_sum_;
};

}  // namespace

GbtModel train_gbt(FeatureSchema schema, const std::vector<double>& X, const std::vector<u8>& y,
                   const GbtHyperparams& hp, TrainReport* report) {
    Trainer trainer(schema, X, y, hp);
    return trainer.run(report);
}

std::vector<u64> false_negatives(const GbtModel& model, const std::vector<double>& X,
                                 const std::vector<u8>& y) {
    const std::size_t d = feature_count(model.schema);
    if (X.size() != y.size() * d) throw std::invalid_argument("false_negatives: X/y size mismatch");
    std::vector<u64> out;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 1 && model.decide(&X[i * d]) == 0) out.push_back(i);
    }
    return out;
}

std::string GbtModel::serialize() const {
    ByteWriter w;
    w.put_bytes(kGbtMagic, 8);
    w.put_u32(static_cast<u32>(schema));
    w.put_u32(params.n_trees);
    w.put_u32(params.max_depth);
    w.put_f64(params.learning_rate);
    w.put_u32(params.min_samples_leaf);
    w.put_u32(params.max_bins);
    w.put_f64(initial_score);
    w.put_f64(tau);
    w.put_u32(static_cast<u32>(trees.size()));
    for (const RegressionTree& t : trees) {
        w.put_u32(static_cast<u32>(t.nodes.size()));
        for (const TreeNode& n : t.nodes) {
            w.put_u16(n.feature);
            w.put_f64(n.threshold);
            w.put_u32(n.left);
            w.put_u32(n.right);
            w.put_u8(n.is_leaf);
            w.put_f64(n.value);
        }
    }
    std::string payload = w.take();
    u32 crc = crc32(payload.data(), payload.size());
    ByteWriter tail;
    tail.put_u32(crc);
    return payload + tail.bytes();
}

GbtModel GbtModel::deserialize(const std::string& bytes) {
    if (bytes.size() < 12) throw DataError("gbt: truncated");
    std::string payload = bytes.substr(0, bytes.size() - 4);
    ByteReader tail(bytes.data() + bytes.size() - 4, 4);
    if (tail.get_u32() != crc32(payload.data(), payload.size())) {
        throw DataError("gbt: CRC mismatch");
    }
    ByteReader r(payload);
    char magic[8];
    r.get_bytes(magic, 8);
    if (std::memcmp(magic, kGbtMagic, 8) != 0) throw DataError("gbt: bad magic");
    GbtModel m;
    u32 schema = r.get_u32();
    if (schema != static_cast<u32>(FeatureSchema::kRich45) &&
        schema != static_cast<u32>(FeatureSchema::kLean12)) {
        throw DataError("gbt: unknown feature schema");
    }
    m.schema = static_cast<FeatureSchema>(schema);
    m.params.n_trees = r.get_u32();
    m.params.max_depth = r.get_u32();
    m.params.learning_rate = r.get_f64();
    m.params.min_samples_leaf = r.get_u32();
    m.params.max_bins = r.get_u32();
    m.initial_score = r.get_f64();
    m.tau = r.get_f64();
    u32 tree_count = r.get_u32();
    m.trees.resize(tree_count);
    for (u32 t = 0; t < tree_count; ++t) {
        u32 node_count = r.get_u32();
        if (node_count == 0) throw DataError("gbt: empty tree");
        m.trees[t].nodes.resize(node_count);
        for (u32 i = 0; i < node_count; ++i) {
            TreeNode& n = m.trees[t].nodes[i];
            n.feature = r.get_u16();
            n.threshold = r.get_f64();
            n.left = r.get_u32();
            n.right = r.get_u32();
            n.is_leaf = r.get_u8();
            n.value = r.get_f64();
            if (!n.is_leaf && (n.left >= node_count || n.right >= node_count)) {
                throw DataError("gbt: bad child index");
            }
        }
    }
    return m;
}

void GbtModel::save(const std::filesystem::path& path) const {
    write_file_atomic(path, serialize());
}

GbtModel GbtModel::load(const std::filesystem::path& path) {
    return deserialize(read_file(path));
}

}  // namespace llsm
