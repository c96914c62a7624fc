#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "mulog/rng.hpp"

using mulog::Philox;

TEST_CASE("philox streams are reproducible and independent") {
    Philox a(42, 7);
    Philox b(42, 7);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.uniform() == b.uniform());
        CHECK(a.normal() == b.normal());
    }

    // different stream, same seed: sequences must diverge immediately
    Philox c(42, 8);
    Philox d(42, 7);
    int same = 0;
    for (int i = 0; i < 64; ++i)
        if (c.uniform() == d.uniform()) ++same;
    CHECK(same == 0);

    // different seed, same stream
    Philox e(43, 7);
    Philox f(42, 7);
    same = 0;
    for (int i = 0; i < 64; ++i)
        if (e.uniform() == f.uniform()) ++same;
    CHECK(same == 0);
}

TEST_CASE("uniform values lie strictly inside (0,1)") {
    Philox rng(1, 0);
    double lo = 1.0, hi = 0.0;
    bool inside = true;
    for (int i = 0; i < 1000000; ++i) {
        double u = rng.uniform();
        if (!(u > 0.0 && u < 1.0)) inside = false;
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(inside);
    // with 1e6 draws the extremes should approach the interval ends
    CHECK(lo < 1e-4);
    CHECK(hi > 1.0 - 1e-4);
}

TEST_CASE("uniform moments match U(0,1) within 3 standard errors") {
    Philox rng(5, 1);
    const int n = 1000000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        s += u;
        s2 += u * u;
    }
    double mean = s / n;
    double var = s2 / n - mean * mean;
    double se_mean = std::sqrt(1.0 / 12.0 / n);
    CHECK(std::abs(mean - 0.5) < 3.0 * se_mean);
    CHECK(std::abs(var - 1.0 / 12.0) < 0.01 / 12.0);
}

TEST_CASE("normal moments match N(0,1) within 3 standard errors") {
    Philox rng(9, 3);
    const int n = 1000000;
    double s = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = rng.normal();
        s += z;
        double z2 = z * z;
        s2 += z2;
        s3 += z2 * z;
        s4 += z2 * z2;
    }
    double mean = s / n;
    double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(s3 / n) < 3.0 * std::sqrt(15.0 / n));   // Var[Z^3] = 15
    CHECK(std::abs(s4 / n - 3.0) < 3.0 * std::sqrt(96.0 / n)); // Var[Z^4] = 96
}

TEST_CASE("gamma moments match Gamma(shape,1) within 3 standard errors") {
    for (double shape : {0.5, 1.0, 3.7}) {
        CAPTURE(shape);
        Philox rng(11, static_cast<std::uint64_t>(shape * 100));
        const int n = 500000;
        std::vector<double> xs(n);
        double s = 0.0;
        bool all_positive = true;
        for (int i = 0; i < n; ++i) {
            double g = rng.gamma(shape);
            if (!(g > 0.0)) all_positive = false;
            xs[i] = g;
            s += g;
        }
        CHECK(all_positive);
        double mean = s / n;
        double v = 0.0, m4 = 0.0;
        for (double x : xs) {
            double d = x - mean;
            v += d * d;
            m4 += d * d * d * d;
        }
        v /= n;
        m4 /= n;
        double se_mean = std::sqrt(shape / n);
        // standard error of the sample variance from the empirical 4th moment
        double se_var = std::sqrt(std::max(m4 - v * v, 0.0) / n);
        CHECK(std::abs(mean - shape) < 3.0 * se_mean);
        CHECK(std::abs(v - shape) < 3.0 * se_var);
    }
}

TEST_CASE("gamma is deterministic per (seed, stream)") {
    Philox a(3, 2), b(3, 2);
    for (int i = 0; i < 200; ++i) CHECK(a.gamma(0.7) == b.gamma(0.7));
}
