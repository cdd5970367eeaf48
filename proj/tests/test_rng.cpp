#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "slim/rng.hpp"

using slim::Rng;

TEST_CASE("identical seeds give identical streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42), d(43);
    bool all_same = true;
    for (int i = 0; i < 16; ++i) all_same = all_same && c.next_u64() == d.next_u64();
    CHECK_FALSE(all_same);
}

TEST_CASE("uniform stays in [0,1) and fills the range") {
    Rng rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 20000; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("uniform_int covers inclusive bounds") {
    Rng rng(8);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 5000; ++i) {
        int v = rng.uniform_int(2, 6);
        CHECK(v >= 2);
        CHECK(v <= 6);
        ++counts[v - 2];
    }
    for (int c : counts) CHECK(c > 0);
}

TEST_CASE("log_uniform respects bounds and skews low") {
    Rng rng(9);
    int below_geo_mean = 0;
    for (int i = 0; i < 4000; ++i) {
        double v = rng.log_uniform(1e-4, 5e-3);
        CHECK(v >= 1e-4);
        CHECK(v <= 5e-3);
        if (v < std::sqrt(1e-4 * 5e-3)) ++below_geo_mean;
    }
    CHECK(below_geo_mean > 1600);
    CHECK(below_geo_mean < 2400);
}

TEST_CASE("normal has roughly the requested moments") {
    Rng rng(10);
    double sum = 0.0, sq = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        double v = rng.normal(1.0, 2.0);
        sum += v;
        sq += v * v;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(1.0).epsilon(0.05));
    CHECK(var == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("shuffle is a permutation and is seed-deterministic") {
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    auto v2 = v;
    Rng a(11), b(11);
    a.shuffle(v);
    b.shuffle(v2);
    CHECK(v == v2);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("categorical draws respect the weights") {
    Rng rng(12);
    std::vector<double> probs = {0.3, 0.5, 0.2};
    std::vector<int> counts(3, 0);
    for (int i = 0; i < 30000; ++i) ++counts[rng.categorical(probs)];
    CHECK(counts[0] / 30000.0 == doctest::Approx(0.3).epsilon(0.1));
    CHECK(counts[1] / 30000.0 == doctest::Approx(0.5).epsilon(0.1));
    CHECK(counts[2] / 30000.0 == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("fork_seed separates streams") {
    CHECK(slim::fork_seed(1, 0) != slim::fork_seed(1, 1));
    CHECK(slim::fork_seed(1, 0) != slim::fork_seed(2, 0));
    CHECK(slim::fork_seed(5, 3) == slim::fork_seed(5, 3));
}
