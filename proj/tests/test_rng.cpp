#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "oee/rng.hpp"

using oee::Rng;

TEST_CASE("same seed reproduces the stream") {
    Rng a(12345), b(12345);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("children are independent of parent draw position") {
    Rng parent(99);
    const Rng c1 = parent.child(7);
    parent.uniform01();
    parent.uniform01();
    Rng c2 = parent.child(7);
    Rng c1_copy = c1;
    for (int i = 0; i < 100; ++i) CHECK(c1_copy.next_u64() == c2.next_u64());
    // distinct ids give distinct streams
    Rng c3 = parent.child(8);
    CHECK(parent.child(7).next_u64() != c3.next_u64());
}

TEST_CASE("uniform01 stays in [0,1) with sane mean") {
    Rng rng(7);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / 100000 - 0.5) < 0.01);
}

TEST_CASE("uniform_int covers the range without bias") {
    Rng rng(11);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) counts[rng.uniform_int(7)]++;
    for (int c : counts) CHECK(std::abs(c - n / 7) < 5 * std::sqrt(n / 7.0));
    CHECK_THROWS_AS(rng.uniform_int(0), oee::ArgumentError);
}

TEST_CASE("normal has the requested moments") {
    Rng rng(123);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal(2.0, 3.0);
        sum += z;
        sq += z * z;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean - 2.0) < 4.0 * 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 9.0) < 0.2);
}

TEST_CASE("seed tree is reproducible") {
    const Rng root(42);
    Rng a = root.child(1).child(5);
    Rng b = root.child(1).child(5);
    CHECK(a.next_u64() == b.next_u64());
    CHECK(root.child(1).child(5).seed() != root.child(2).child(5).seed());
}
