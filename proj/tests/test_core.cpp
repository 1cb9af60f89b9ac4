#include <cmath>

#include "doctest.h"
#include "har/digest.hpp"
#include "har/errors.hpp"
#include "har/format.hpp"
#include "har/rng.hpp"
#include "har/tensor.hpp"

using namespace har;

TEST_CASE("tensor shape and indexing") {
    Tensor t({2, 3, 4});
    CHECK(t.size() == 24);
    CHECK(t.rank() == 3);
    t(1, 2, 3) = 7.5;
    CHECK(t[1 * 12 + 2 * 4 + 3] == 7.5);
    CHECK(t(1, 2, 3) == 7.5);

    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), ValidationError);
    CHECK_THROWS_AS(t.reshaped({5}), ValidationError);

    Tensor flat = t.reshaped({24});
    CHECK(flat.rank() == 1);
    CHECK(flat[1 * 12 + 2 * 4 + 3] == 7.5);
}

TEST_CASE("tensor finiteness checks") {
    Tensor t({2, 2}, {1.0, 2.0, 3.0, 4.0});
    CHECK(t.all_finite());
    t(0, 1) = std::nan("");
    CHECK_FALSE(t.all_finite());
    CHECK_THROWS_AS(require_finite(t, "test"), ValidationError);
}

TEST_CASE("rng determinism across instances") {
    RngState a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(a.draw_count() == 100);

    RngState c(42), d(43);
    bool differs = false;
    for (int i = 0; i < 10; ++i) differs |= (c.next_u64() != d.next_u64());
    CHECK(differs);
}

TEST_CASE("rng uniform range and index bounds") {
    RngState rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    for (int i = 0; i < 1000; ++i) {
        CHECK(rng.uniform_index(7) < 7);
    }
    CHECK_THROWS_AS(rng.uniform_index(0), ValidationError);
}

TEST_CASE("rng normal moments") {
    RngState rng(11);
    const std::size_t n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = rng.normal(0.0, 0.01);
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / n;
    const double std = std::sqrt(sum_sq / n - mean * mean);
    CHECK(std::abs(mean) < 1e-4);
    CHECK(std == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("derived streams are independent of draw history") {
    RngState base(5);
    base.next_u64();
    RngState s1 = RngState::derive(5, "mutate", 3);
    RngState s2 = RngState::derive(5, "mutate", 3);
    CHECK(s1.next_u64() == s2.next_u64());
    RngState s3 = RngState::derive(5, "mutate", 4);
    RngState s4 = RngState::derive(5, "other", 3);
    CHECK(s1.next_u64() != s3.next_u64());
    CHECK(s2.next_u64() != s4.next_u64());
}

TEST_CASE("fnv digest is stable and order sensitive") {
    CHECK(digest_string("abc") == digest_string("abc"));
    CHECK(digest_string("abc") != digest_string("acb"));
    CHECK(digest_string("").size() == 16);
}

TEST_CASE("format_double round-trips") {
    for (double v : {0.0, 1.0, -1.5, 0.1, 1e-12, 3.141592653589793, 1e300}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}
