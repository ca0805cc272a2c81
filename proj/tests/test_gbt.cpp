#include <doctest.h>

#include <cmath>

#include "llsm/gbt.hpp"
#include "llsm/hash.hpp"

using namespace llsm;

namespace {

constexpr std::size_t kD = 12;  // LEAN12 width used for toy sets

// 1-D toy set on column 0: x < 5 -> 0, x >= 5 -> 1, 20 points.
void toy_set(std::vector<double>& X, std::vector<u8>& y) {
    X.assign(20 * kD, 0.0);
    y.assign(20, 0);
    for (int i = 0; i < 20; ++i) {
        X[static_cast<std::size_t>(i) * kD] = i;
        y[static_cast<std::size_t>(i)] = i >= 5 ? 1 : 0;
    }
}

std::vector<double> row(double x0, double x1 = 0.0) {
    std::vector<double> r(kD, 0.0);
    r[0] = x0;
    r[1] = x1;
    return r;
}

}  // namespace

TEST_CASE("sigmoid basics") {
    CHECK(sigmoid(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    for (double z : {1.0, 10.0, -1.0, -10.0}) {
        CHECK(sigmoid(z) + sigmoid(-z) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(sigmoid(1000.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::isfinite(sigmoid(1000.0)));
    CHECK(std::isfinite(sigmoid(-1000.0)));
}

TEST_CASE("logistic loss basics") {
    CHECK(logistic_loss(1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(logistic_loss(1.0, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(logistic_loss(0.0, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(logistic_loss(0.0, 1.0) >= 0.0);
    CHECK(std::isfinite(logistic_loss(0.0, 1.0)));
}

TEST_CASE("pseudo-residual matches the loss gradient by finite differences") {
    // d loss / d logit = sigmoid(logit) - y, checked at <= 1e-6.
    SplitMix64 rng(10);
    for (int i = 0; i < 200; ++i) {
        double y = rng.next() & 1 ? 1.0 : 0.0;
        double z = (rng.next_double() - 0.5) * 8.0;
        double h = 1e-6;
        double numeric =
            (logistic_loss(y, sigmoid(z + h)) - logistic_loss(y, sigmoid(z - h))) / (2 * h);
        double analytic = sigmoid(z) - y;
        CHECK(std::abs(numeric - analytic) <= 1e-6);
    }
}

TEST_CASE("separable 1-D toy set fits to accuracy 1.0") {
    std::vector<double> X;
    std::vector<u8> y;
    toy_set(X, y);
    GbtHyperparams hp{.n_trees = 50, .max_depth = 2, .learning_rate = 0.1,
                      .min_samples_leaf = 1};
    TrainReport report;
    GbtModel m = train_gbt(FeatureSchema::kLean12, X, y, hp, &report);

    for (int i = 0; i < 20; ++i) {
        CHECK(m.decide(&X[static_cast<std::size_t>(i) * kD]) == (y[static_cast<std::size_t>(i)]));
    }
    CHECK(m.predict_proba(row(1).data()) < 0.5);
    CHECK(m.predict_proba(row(9).data()) > 0.5);

    // Monotone training loss with 1e-9 slack.
    for (std::size_t t = 1; t < report.loss_per_round.size(); ++t) {
        CHECK(report.loss_per_round[t] <= report.loss_per_round[t - 1] + 1e-9);
    }

    // false_negatives on the training set is empty at accuracy 1.
    CHECK(false_negatives(m, X, y).empty());
}

TEST_CASE("all-identical features predict the base rate") {
    std::vector<double> X(30 * kD, 1.5);
    std::vector<u8> y(30, 0);
    for (int i = 0; i < 9; ++i) y[static_cast<std::size_t>(i)] = 1;  // p = 0.3
    GbtHyperparams hp{.n_trees = 20, .max_depth = 3, .learning_rate = 0.1};
    GbtModel m = train_gbt(FeatureSchema::kLean12, X, y, hp);
    CHECK(m.predict_proba(row(1.5).data()) == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(m.predict_proba(row(99.0).data()) == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("XOR-style clusters fit with depth >= 2") {
    // Clustered (jittered) points: a perfectly symmetric XOR grid has zero
    // first-order variance gain and gives greedy splitting nothing to cut.
    std::vector<double> X;
    std::vector<u8> y;
    const double c[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    const u8 label[4] = {0, 1, 1, 0};
    SplitMix64 jitter(4);
    for (int cluster = 0; cluster < 4; ++cluster) {
        for (int rep = 0; rep < 8; ++rep) {
            auto r = row(c[cluster][0] + (jitter.next_double() - 0.5) * 0.2,
                         c[cluster][1] + (jitter.next_double() - 0.5) * 0.2);
            X.insert(X.end(), r.begin(), r.end());
            y.push_back(label[cluster]);
        }
    }
    GbtHyperparams hp{.n_trees = 50, .max_depth = 2, .learning_rate = 0.1,
                      .min_samples_leaf = 1};
    GbtModel m = train_gbt(FeatureSchema::kLean12, X, y, hp);
    // Training accuracy 1.0; labels come from enumerating the clusters.
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(m.decide(&X[i * kD]) == y[i]);
    }
}

TEST_CASE("probability calibration stays near the base rate") {
    SplitMix64 rng(20);
    const std::size_t n = 2000;
    std::vector<double> X(n * kD);
    std::vector<u8> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < kD; ++j) X[i * kD + j] = rng.next_double();
        y[i] = rng.next_double() < 0.3 ? 1 : 0;  // noise labels at base 0.3
    }
    double base = 0;
    for (u8 v : y) base += v;
    base /= static_cast<double>(n);

    GbtHyperparams hp{.n_trees = 60, .max_depth = 4, .learning_rate = 0.1};
    GbtModel m = train_gbt(FeatureSchema::kLean12, X, y, hp);
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += m.predict_proba(&X[i * kD]);
    mean /= static_cast<double>(n);
    CHECK(std::abs(mean - base) <= 0.05);
}

TEST_CASE("training is reproducible bit for bit") {
    std::vector<double> X;
    std::vector<u8> y;
    toy_set(X, y);
    GbtHyperparams hp{.n_trees = 30, .max_depth = 3, .learning_rate = 0.1,
                      .min_samples_leaf = 1};
    GbtModel a = train_gbt(FeatureSchema::kLean12, X, y, hp);
    GbtModel b = train_gbt(FeatureSchema::kLean12, X, y, hp);
    CHECK(a.serialize() == b.serialize());
}

TEST_CASE("serialization round-trip preserves predictions exactly") {
    SplitMix64 rng(30);
    const std::size_t n = 500;
    std::vector<double> X(n * kD);
    std::vector<u8> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < kD; ++j) X[i * kD + j] = rng.next_double() * 100;
        y[i] = X[i * kD] > 50 ? 1 : 0;
    }
    GbtHyperparams hp{.n_trees = 40, .max_depth = 4, .learning_rate = 0.1};
    GbtModel m = train_gbt(FeatureSchema::kLean12, X, y, hp);
    GbtModel m2 = GbtModel::deserialize(m.serialize());

    for (int i = 0; i < 1000; ++i) {
        std::vector<double> r(kD);
        for (auto& v : r) v = rng.next_double() * 100;
        double p1 = m.predict_proba(r.data());
        double p2 = m2.predict_proba(r.data());
        CHECK(std::memcmp(&p1, &p2, sizeof(double)) == 0);
    }

    std::string corrupted = m.serialize();
    corrupted[40] = static_cast<char>(corrupted[40] ^ 0xFF);
    CHECK_THROWS_AS(GbtModel::deserialize(corrupted), DataError);
}

TEST_CASE("single-class data is rejected with guidance") {
    std::vector<double> X(10 * kD, 0.0);
    std::vector<u8> y(10, 1);
    GbtHyperparams hp;
    try {
        train_gbt(FeatureSchema::kLean12, X, y, hp);
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("constant") != std::string::npos);
    }
}

TEST_CASE("false_negatives under stub models") {
    std::vector<double> X;
    std::vector<u8> y;
    toy_set(X, y);

    GbtModel reject_all;
    reject_all.schema = FeatureSchema::kLean12;
    reject_all.initial_score = -100.0;
    auto fn = false_negatives(reject_all, X, y);
    CHECK(fn.size() == 15);  // every positive

    GbtModel accept_all;
    accept_all.schema = FeatureSchema::kLean12;
    accept_all.initial_score = 100.0;
    CHECK(false_negatives(accept_all, X, y).empty());
}

TEST_CASE("zero-tree model predicts its base rate") {
    GbtModel m;
    m.schema = FeatureSchema::kLean12;
    m.initial_score = 0.0;
    CHECK(m.predict_proba(row(123).data()) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.decide(row(123).data()) == 1);  // 0.5 >= tau
}
