#include <cmath>

#include "doctest.h"
#include "har/errors.hpp"
#include "har/metrics.hpp"
#include "har/rng.hpp"
#include "oracles.hpp"

using namespace har;
using namespace har::metrics;

TEST_CASE("sigmoid fixed points and symmetry") {
    Tensor x({3}, {0.0, 1.0, -1.0});
    const Tensor y = sigmoid(x);
    CHECK(y[0] == 0.5);
    CHECK(y[1] == doctest::Approx(0.73106).epsilon(1e-5));

    RngState rng(3);
    Tensor r = test::random_tensor({50}, rng, -20.0, 20.0);
    Tensor neg = r;
    for (auto& v : neg.values()) v = -v;
    const Tensor a = sigmoid(r), b = sigmoid(neg);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] + b[i] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(a[i] > 0.0);
        CHECK(a[i] < 1.0);
    }
}

TEST_CASE("softmax sums to one and is shift invariant") {
    Tensor uniform({4}, {2.0, 2.0, 2.0, 2.0});
    const Tensor u = softmax(uniform);
    for (std::size_t i = 0; i < 4; ++i) CHECK(u[i] == doctest::Approx(0.25).epsilon(1e-12));

    Tensor x({2}, {0.0, std::log(3.0)});
    const Tensor y = softmax(x);
    CHECK(y[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(0.75).epsilon(1e-12));

    RngState rng(5);
    Tensor r = test::random_tensor({6}, rng, -3.0, 3.0);
    Tensor shifted = r;
    for (auto& v : shifted.values()) v += 17.25;
    const Tensor a = softmax(r), b = softmax(shifted);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::abs(a[i] - b[i]) < 1e-12);
        sum += a[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("bce loss closed forms") {
    CHECK(bce_loss(Tensor({2}, {1.0, 0.0}), Tensor({2}, {1.0 - 1e-12, 1e-12})) < 1e-10);
    CHECK(bce_loss(Tensor({1}, {1.0}), Tensor({1}, {0.5})) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK_THROWS_AS(bce_loss(Tensor({1}, {0.5}), Tensor({1}, {0.5})), ValidationError);
}

TEST_CASE("bce matches summation oracle on random inputs") {
    RngState rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor target({8});
        for (auto& v : target.values()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
        Tensor pred = test::random_tensor({8}, rng, 1e-6, 1.0 - 1e-6);
        CHECK(bce_loss(target, pred) ==
              doctest::Approx(test::bce_oracle(target, pred)).epsilon(1e-12));
    }
}

TEST_CASE("bce monotonicity in predictions") {
    const Tensor target({2}, {1.0, 0.0});
    double prev_up = bce_loss(target, Tensor({2}, {0.1, 0.5}));
    for (double p : {0.3, 0.5, 0.7, 0.9}) {
        const double now = bce_loss(target, Tensor({2}, {p, 0.5}));
        CHECK(now < prev_up);  // increasing the score of a 1-target lowers loss
        prev_up = now;
    }
    double prev_down = bce_loss(target, Tensor({2}, {0.5, 0.1}));
    for (double p : {0.3, 0.5, 0.7, 0.9}) {
        const double now = bce_loss(target, Tensor({2}, {0.5, p}));
        CHECK(now > prev_down);  // increasing the score of a 0-target raises loss
        prev_down = now;
    }
}

TEST_CASE("per-class precision and recall hand counts") {
    const std::vector<int> truth{0, 0, 1};
    const std::vector<int> pred{0, 1, 1};
    const PrecisionRecall pr = per_class_precision_recall(pred, truth, 2);
    CHECK(pr.precision[0] == 1.0);
    CHECK(pr.precision[1] == 0.5);
    CHECK(pr.recall[0] == 0.5);
    CHECK(pr.recall[1] == 1.0);

    const PrecisionRecall perfect = per_class_precision_recall({0, 1, 2}, {0, 1, 2}, 4);
    for (int k = 0; k < 3; ++k) {
        CHECK(perfect.precision[k] == 1.0);
        CHECK(perfect.recall[k] == 1.0);
    }
    // class 3 absent everywhere: 0 by convention
    CHECK(perfect.precision[3] == 0.0);
    CHECK(perfect.recall[3] == 0.0);
}

TEST_CASE("weighted f1 examples") {
    CHECK(weighted_f1({0, 1, 2, 1}, {0, 1, 2, 1}, 3) == 1.0);
    CHECK(weighted_f1({0, 1, 1}, {0, 0, 1}, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(weighted_f1({1, 1, 1}, {0, 0, 0}, 2) == 0.0);
    CHECK_THROWS_AS(weighted_f1({}, {}, 2), ValidationError);
    CHECK_THROWS_AS(weighted_f1({5}, {0}, 2), ValidationError);
}

TEST_CASE("weighted f1 matches hand-count oracle on random sets") {
    RngState rng(23);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t K = 2 + rng.uniform_index(5);
        const std::size_t N = 1 + rng.uniform_index(30);
        std::vector<int> truth(N), pred(N);
        for (std::size_t i = 0; i < N; ++i) {
            truth[i] = static_cast<int>(rng.uniform_index(K));
            pred[i] = static_cast<int>(rng.uniform_index(K));
        }
        CHECK(weighted_f1(pred, truth, K) ==
              doctest::Approx(test::weighted_f1_oracle(pred, truth, K)).epsilon(1e-12));
    }
}

TEST_CASE("weighted f1 is invariant under consistent relabeling") {
    RngState rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t K = 4;
        const std::size_t N = 25;
        std::vector<int> truth(N), pred(N);
        for (std::size_t i = 0; i < N; ++i) {
            truth[i] = static_cast<int>(rng.uniform_index(K));
            pred[i] = static_cast<int>(rng.uniform_index(K));
        }
        // random permutation of class ids
        std::vector<int> perm{0, 1, 2, 3};
        for (std::size_t i = K; i-- > 1;) {
            std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
        }
        std::vector<int> truth_p(N), pred_p(N);
        for (std::size_t i = 0; i < N; ++i) {
            truth_p[i] = perm[truth[i]];
            pred_p[i] = perm[pred[i]];
        }
        CHECK(weighted_f1(pred, truth, K) ==
              doctest::Approx(weighted_f1(pred_p, truth_p, K)).epsilon(1e-12));
    }
}

TEST_CASE("class counts come from truth labels") {
    const ClassCounts counts = ClassCounts::from_labels({0, 0, 2, 1, 0}, 3);
    CHECK(counts.total == 5);
    CHECK(counts.per_class[0] == 3);
    CHECK(counts.per_class[1] == 1);
    CHECK(counts.per_class[2] == 1);
}
