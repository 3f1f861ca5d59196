#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "trendlab/rng.hpp"

using trendlab::Rng;

TEST_CASE("identical (seed, stream) replays the same sequence", "[rng]") {
    Rng a(42, 7), b(42, 7);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("streams from one seed are distinct", "[rng]") {
    Rng a(42, 0), b(42, 1), c(43, 0);
    int same_ab = 0, same_ac = 0;
    for (int i = 0; i < 256; ++i) {
        std::uint64_t ua = a.next_u64();
        if (ua == b.next_u64()) ++same_ab;
        if (ua == c.next_u64()) ++same_ac;
    }
    REQUIRE(same_ab == 0);
    REQUIRE(same_ac == 0);
}

TEST_CASE("uniforms live in (0, 1] with mean 1/2", "[rng]") {
    Rng rng(1, 0);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double u = rng.next_uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u <= 1.0);
        sum += u;
    }
    REQUIRE(std::fabs(sum / n - 0.5) < 0.005);
}

TEST_CASE("normals have mean 0, variance 1", "[rng]") {
    Rng rng(7, 3);
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double z = rng.next_normal();
        sum += z;
        sum2 += z * z;
    }
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    REQUIRE(std::fabs(mean) < 0.01);
    REQUIRE(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("next_below covers the range without exceeding it", "[rng]") {
    Rng rng(11, 0);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        std::uint64_t v = rng.next_below(17);
        REQUIRE(v < 17);
        seen.insert(v);
    }
    REQUIRE(seen.size() == 17);
}

TEST_CASE("student-t draws are finite and heavier tailed than normal", "[rng]") {
    Rng rng(5, 0);
    int extreme = 0;
    for (int i = 0; i < 50000; ++i) {
        double t = rng.next_student_t(3);
        REQUIRE(std::isfinite(t));
        if (std::fabs(t) > 4.0) ++extreme;
    }
    // P(|t_3| > 4) ~ 1.4%, P(|N| > 4) ~ 0.006%
    REQUIRE(extreme > 100);
}
