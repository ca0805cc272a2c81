#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "llsm/features.hpp"
#include "llsm/types.hpp"

namespace llsm {

double sigmoid(double z);

// -[y log yhat + (1-y) log(1-yhat)] with yhat clamped to [1e-12, 1-1e-12].
double logistic_loss(double y, double yhat);

struct GbtHyperparams {
    u32 n_trees = 200;
    u32 max_depth = 6;
    double learning_rate = 0.1;
    u32 min_samples_leaf = 5;
    u32 max_bins = 256;  // candidate thresholds per feature capped at max_bins - 1
};

struct TreeNode {
    u16 feature = 0;
    u8 is_leaf = 1;
    double threshold = 0.0;  // internal: go left iff x[feature] < threshold
    u32 left = 0;
    u32 right = 0;
    double value = 0.0;  // leaf payload (raw, scaled by learning_rate at predict)
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(const double* x) const {
        u32 i = 0;
        while (!nodes[i].is_leaf) {
            i = x[nodes[i].feature] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
        }
        return nodes[i].value;
    }
};

// Additive logistic-loss ensemble: proba(x) = sigmoid(initial_score +
// learning_rate * sum_t tree_t(x)), decision = [proba >= tau].
class GbtModel {
  public:
    FeatureSchema schema = FeatureSchema::kRich45;
    GbtHyperparams params;
    double initial_score = 0.0;
    double tau = 0.5;
    std::vector<RegressionTree> trees;

    double predict_proba(const double* x) const;
    double predict_proba(const FeatureVector& v) const;
    // decide compares in logit space: sigmoid is strictly monotone, so
    // proba >= tau exactly when the raw score reaches logit(tau).
    int decide(const double* x) const {
        double score = 0.0;
        for (const RegressionTree& t : trees) score += t.predict(x);
        return initial_score + params.learning_rate * score >= logit_tau() ? 1 : 0;
    }
    int decide(const FeatureVector& v) const { return predict_proba(v) >= tau ? 1 : 0; }
    double logit_tau() const {
        if (tau <= 0.0) return -1e300;
        if (tau >= 1.0) return 1e300;
        return std::log(tau / (1.0 - tau));
    }

    std::string serialize() const;
    static GbtModel deserialize(const std::string& bytes);
    void save(const std::filesystem::path& path) const;
    static GbtModel load(const std::filesystem::path& path);
    u64 serialized_bytes() const { return serialize().size(); }
};

struct TrainReport {
    std::vector<double> loss_per_round;  // mean logistic loss after each round
};

// X is row-major, n rows by feature_count(schema) columns; y holds 0/1 labels.
// Requires n >= 2 with both classes present.
GbtModel train_gbt(FeatureSchema schema, const std::vector<double>& X, const std::vector<u8>& y,
                   const GbtHyperparams& hp, TrainReport* report = nullptr);

// Indices i with y_i = 1 and decide(x_i) = 0.
std::vector<u64> false_negatives(const GbtModel& model, const std::vector<double>& X,
                                 const std::vector<u8>& y);

}  // namespace llsm
