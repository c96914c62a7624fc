#include <doctest.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "mulog/errors.hpp"
#include "mulog/hermitian.hpp"
#include "mulog/rng.hpp"
#include "mulog/statistics.hpp"

using namespace mulog;

namespace {

HermMat random_hermitian(Philox& rng, int d, double scale = 1.0) {
    HermMat m(d);
    for (int i = 0; i < d; ++i) m.diag(i) = scale * rng.normal();
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            m.upper(i, j) = scale * cplx(rng.normal(), rng.normal()) / std::sqrt(2.0);
    return m;
}

// G G^H + eps I, well inside the PD cone.
HermMat random_psd(Philox& rng, int d, double eps = 1e-3) {
    std::vector<cplx> g(static_cast<std::size_t>(d) * d);
    for (auto& v : g) v = cplx(rng.normal(), rng.normal()) / std::sqrt(2.0);
    HermMat m(d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            cplx acc(0.0);
            for (int k = 0; k < d; ++k)
                acc += g[static_cast<std::size_t>(i) * d + k] *
                       std::conj(g[static_cast<std::size_t>(j) * d + k]);
            if (i == j)
                m.diag(i) = acc.real() + eps;
            else
                m.upper(i, j) = acc;
        }
    return m;
}

double rel_diff(const HermMat& a, const HermMat& b) {
    return (a - b).frobenius_norm() / std::max(b.frobenius_norm(), 1e-300);
}

} // namespace

TEST_CASE("HermMat storage keeps conjugate symmetry") {
    HermMat m(3);
    m.diag(0) = 2.0;
    m.upper(0, 2) = cplx(1.0, -0.5);
    CHECK(m.at(0, 2) == cplx(1.0, -0.5));
    CHECK(m.at(2, 0) == cplx(1.0, 0.5));
    CHECK(m.at(0, 0) == cplx(2.0, 0.0));
    CHECK(m.trace() == 2.0);
}

TEST_CASE("eigendecomposition matches hand-computed 2x2 cases") {
    EigH id = eig_hermitian(HermMat::identity(2));
    CHECK(id.values[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(id.values[1] == doctest::Approx(1.0).epsilon(1e-14));

    HermMat diag(2);
    diag.diag(0) = 4.0;
    diag.diag(1) = 1.0;
    EigH ed = eig_hermitian(diag);
    CHECK(ed.values[0] == doctest::Approx(1.0).epsilon(1e-14)); // ascending
    CHECK(ed.values[1] == doctest::Approx(4.0).epsilon(1e-14));

    HermMat m(2);
    m.diag(0) = 2.0;
    m.diag(1) = 2.0;
    m.upper(0, 1) = cplx(1.0, 0.0);
    EigH e = eig_hermitian(m);
    CHECK(e.values[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.values[1] == doctest::Approx(3.0).epsilon(1e-12));
    // eigenvectors (1, -1)/sqrt(2) and (1, 1)/sqrt(2) up to a unit phase
    cplx v0[2] = {e.vectors[0], e.vectors[1]};
    cplx v1[2] = {e.vectors[2], e.vectors[3]};
    double s = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(std::conj(v0[0]) * s - std::conj(v0[1]) * s) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(std::conj(v1[0]) * s + std::conj(v1[1]) * s) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eigendecomposition reconstructs random Hermitian matrices") {
    Philox rng(101, 0);
    for (int d : {1, 2, 3, 6}) {
        CAPTURE(d);
        double worst_rec = 0.0, worst_orth = 0.0;
        for (int t = 0; t < 200; ++t) {
            HermMat m = random_hermitian(rng, d, 2.0);
            EigH e = eig_hermitian(m);
            for (int i = 0; i + 1 < d; ++i) REQUIRE(e.values[i] <= e.values[i + 1]);
            HermMat rec(d);
            for (int i = 0; i < d; ++i)
                for (int j = i; j < d; ++j) {
                    cplx acc(0.0);
                    for (int k = 0; k < d; ++k)
                        acc += e.vectors[static_cast<std::size_t>(k) * d + i] * e.values[k] *
                               std::conj(e.vectors[static_cast<std::size_t>(k) * d + j]);
                    if (i == j)
                        rec.diag(i) = acc.real();
                    else
                        rec.upper(i, j) = acc;
                }
            worst_rec = std::max(worst_rec,
                                 (rec - m).frobenius_norm() / std::max(m.frobenius_norm(), 1.0));
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    cplx dot(0.0);
                    for (int k = 0; k < d; ++k)
                        dot += std::conj(e.vectors[static_cast<std::size_t>(a) * d + k]) *
                               e.vectors[static_cast<std::size_t>(b) * d + k];
                    worst_orth = std::max(worst_orth, std::abs(dot - (a == b ? 1.0 : 0.0)));
                }
        }
        CHECK(worst_rec < 1e-12);
        CHECK(worst_orth < 1e-12);
    }
}

TEST_CASE("eigendecomposition rejects non-finite input") {
    HermMat m = HermMat::identity(2);
    m.diag(1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(eig_hermitian(m), InvalidDataError);
    HermMat m2 = HermMat::identity(2);
    m2.upper(0, 1) = cplx(std::numeric_limits<double>::infinity(), 0.0);
    CHECK_THROWS_AS(eig_hermitian(m2), InvalidDataError);
}

TEST_CASE("matrix log matches spectral construction") {
    HermMat zero = mat_log(HermMat::identity(3));
    CHECK(zero.frobenius_norm() < 1e-14);

    HermMat d(2);
    d.diag(0) = std::exp(1.0);
    d.diag(1) = std::exp(2.0);
    HermMat ld = mat_log(d);
    CHECK(ld.diag(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ld.diag(1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(ld.upper(0, 1)) < 1e-13);

    // build M = E diag(lam) E^H from a known frame, then check log entrywise
    Philox rng(7, 1);
    HermMat base = random_psd(rng, 3, 0.05);
    EigH e = eig_hermitian(base);
    double lam[3] = {0.5, 1.0, 4.0};
    HermMat m(3), expect(3);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            cplx acc(0.0), acc_log(0.0);
            for (int k = 0; k < 3; ++k) {
                cplx outer = e.vectors[static_cast<std::size_t>(k) * 3 + i] *
                             std::conj(e.vectors[static_cast<std::size_t>(k) * 3 + j]);
                acc += lam[k] * outer;
                acc_log += std::log(lam[k]) * outer;
            }
            if (i == j) {
                m.diag(i) = acc.real();
                expect.diag(i) = acc_log.real();
            } else {
                m.upper(i, j) = acc;
                expect.upper(i, j) = acc_log;
            }
        }
    CHECK((mat_log(m) - expect).frobenius_norm() < 1e-10);
}

TEST_CASE("matrix exp matches spectral construction and inverts log") {
    CHECK((mat_exp(HermMat(2)) - HermMat::identity(2)).frobenius_norm() < 1e-14);

    HermMat d(2);
    d.diag(0) = 1.0;
    d.diag(1) = 2.0;
    HermMat ed = mat_exp(d);
    CHECK(ed.diag(0) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    CHECK(ed.diag(1) == doctest::Approx(std::exp(2.0)).epsilon(1e-12));

    HermMat sigma(2);
    sigma.diag(0) = 2.0;
    sigma.diag(1) = 0.7;
    sigma.upper(0, 1) = cplx(0.4, -0.6);
    for (int t = 0; t < 100; ++t) {
        HermMat c = sample_wishart(sigma, 2, 15, t);
        CHECK(rel_diff(mat_exp(mat_log(c)), c) < 1e-10);
    }
}

TEST_CASE("exp(log(M)) round trip over random PSD matrices") {
    Philox rng(23, 0);
    for (int d : {1, 2, 3, 6}) {
        CAPTURE(d);
        double worst = 0.0;
        for (int t = 0; t < 1000; ++t) {
            HermMat m = random_psd(rng, d);
            worst = std::max(worst, rel_diff(mat_exp(mat_log(m)), m));
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("trace of the log equals the log determinant") {
    Philox rng(29, 0);
    for (int d : {2, 3, 6}) {
        CAPTURE(d);
        double worst = 0.0;
        for (int t = 0; t < 200; ++t) {
            HermMat m = random_psd(rng, d);
            EigH e = eig_hermitian(m);
            double logdet = 0.0;
            for (double v : e.values) logdet += std::log(v);
            worst = std::max(worst, std::abs(mat_log(m).trace() - logdet) /
                                        std::max(std::abs(logdet), 1.0));
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("closed-form 2x2 log/exp agrees with the general spectral path") {
    // equal diagonal with zero off-diagonal exercises the degenerate branch
    double a[1] = {1.0}, b[1] = {1.0}, cre[1] = {0.0}, cim[1] = {0.0};
    double la[1], lb[1], lcre[1], lcim[1];
    mat_log_2x2(a, b, cre, cim, la, lb, lcre, lcim, 1);
    CHECK(la[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(lb[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(lcre[0] == 0.0);
    CHECK(lcim[0] == 0.0);

    // [[2,1],[1,2]] has eigenvalues {1,3}: log = [[log3/2, log3/2],[log3/2, log3/2]]
    a[0] = 2.0;
    b[0] = 2.0;
    cre[0] = 1.0;
    mat_log_2x2(a, b, cre, cim, la, lb, lcre, lcim, 1);
    double half_log3 = 0.5 * std::log(3.0);
    CHECK(la[0] == doctest::Approx(half_log3).epsilon(1e-12));
    CHECK(lb[0] == doctest::Approx(half_log3).epsilon(1e-12));
    CHECK(lcre[0] == doctest::Approx(half_log3).epsilon(1e-12));
    CHECK(std::abs(lcim[0]) < 1e-14);

    Philox rng(31, 0);
    double worst_log = 0.0, worst_exp = 0.0;
    for (int t = 0; t < 1000; ++t) {
        HermMat m = random_psd(rng, 2);
        double ma[1] = {m.diag(0)}, mb[1] = {m.diag(1)};
        double mc[1] = {m.upper(0, 1).real()}, md[1] = {m.upper(0, 1).imag()};
        double oa[1], ob[1], oc[1], od[1];
        mat_log_2x2(ma, mb, mc, md, oa, ob, oc, od, 1);
        HermMat fast(2);
        fast.diag(0) = oa[0];
        fast.diag(1) = ob[0];
        fast.upper(0, 1) = cplx(oc[0], od[0]);
        HermMat general = mat_log(m);
        worst_log = std::max(worst_log, rel_diff(fast, general));

        HermMat h = random_hermitian(rng, 2, 0.8);
        double ha[1] = {h.diag(0)}, hb[1] = {h.diag(1)};
        double hc[1] = {h.upper(0, 1).real()}, hd[1] = {h.upper(0, 1).imag()};
        mat_exp_2x2(ha, hb, hc, hd, oa, ob, oc, od, 1);
        HermMat efast(2);
        efast.diag(0) = oa[0];
        efast.diag(1) = ob[0];
        efast.upper(0, 1) = cplx(oc[0], od[0]);
        worst_exp = std::max(worst_exp, rel_diff(efast, mat_exp(h)));
    }
    CHECK(worst_log < 1e-10);
    CHECK(worst_exp < 1e-10);
}

TEST_CASE("batched 2x2 stack log is at least 10x faster than per-matrix calls") {
    const std::size_t n = 1000000;
    HermStack stack(n, 2);
    Philox rng(37, 0);
    for (std::size_t k = 0; k < n; ++k) stack.set(k, random_psd(rng, 2));

    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    HermStack fast = mat_log(stack);
    auto t1 = clock::now();
    // naive path: per-pixel general eigendecomposition
    HermStack slow(n, 2);
    for (std::size_t k = 0; k < n; ++k) slow.set(k, mat_log(stack.get(k)));
    auto t2 = clock::now();

    double worst = 0.0;
    for (std::size_t k = 0; k < n; k += 997)
        worst = std::max(worst, rel_diff(fast.get(k), slow.get(k)));
    CHECK(worst < 1e-10);

    double fast_s = std::chrono::duration<double>(t1 - t0).count();
    double slow_s = std::chrono::duration<double>(t2 - t1).count();
    CAPTURE(fast_s);
    CAPTURE(slow_s);
    CHECK(slow_s > 10.0 * fast_s);
}

TEST_CASE("matrix log rejects non-PD input with the documented floor") {
    HermMat m(2);
    m.diag(0) = 1.0;
    m.diag(1) = -0.5;
    CHECK_THROWS_AS(mat_log(m), NotPositiveDefiniteError);

    // an eigenvalue below 1e-12 * max(trace/d, 1) counts as non-PD
    HermMat tiny(2);
    tiny.diag(0) = 1.0;
    tiny.diag(1) = 1e-14;
    CHECK_THROWS_AS(mat_log(tiny), NotPositiveDefiniteError);
    CHECK(pd_floor(tiny.trace(), 2) == doctest::Approx(1e-12).epsilon(1e-6));

    // the stack overload reports the offending pixel
    HermStack stack(3, 2);
    stack.set(0, HermMat::identity(2));
    stack.set(1, m);
    stack.set(2, HermMat::identity(2));
    try {
        mat_log(stack);
        FAIL("expected NotPositiveDefiniteError");
    } catch (const NotPositiveDefiniteError& e) {
        CHECK(e.pixel() == 1);
    }
}

TEST_CASE("matrix exp overflow guard") {
    HermMat m(2);
    m.diag(0) = 710.0;
    m.diag(1) = 0.0;
    CHECK_THROWS_AS(mat_exp(m), OverflowError);
    HermMat ok(2);
    ok.diag(0) = 708.0;
    CHECK(std::isfinite(mat_exp(ok).diag(0)));
    CHECK(kExpOverflowLimit == 709.0);
}

TEST_CASE("directional derivative of exp: exact cases and finite differences") {
    Philox rng(41, 0);

    // H = 0: the derivative is the increment itself for any order
    HermMat dh = random_hermitian(rng, 2);
    HermMat at_zero = exp_directional_derivative(HermMat(2), dh, 1);
    CHECK((at_zero - dh).frobenius_norm() < 1e-12);

    // commuting (diagonal) case: e^H dH entry-scaled, independent of q
    HermMat h(2);
    h.diag(0) = 0.3;
    h.diag(1) = -0.4;
    HermMat dd(2);
    dd.diag(0) = 0.7;
    dd.diag(1) = -0.2;
    for (int q : {1, 4, 7}) {
        HermMat g = exp_directional_derivative(h, dd, q);
        CHECK(g.diag(0) == doctest::Approx(std::exp(0.3) * 0.7).epsilon(1e-12));
        CHECK(g.diag(1) == doctest::Approx(std::exp(-0.4) * -0.2).epsilon(1e-12));
    }

    // generic case against a central finite difference of mat_exp
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        HermMat hh = random_hermitian(rng, 2, 0.6);
        HermMat dir = random_hermitian(rng, 2, 0.6);
        HermMat g = exp_directional_derivative(hh, dir, 100);
        const double step = 1e-6;
        HermMat hp = hh, hm = hh;
        for (int i = 0; i < 2; ++i) {
            hp.diag(i) += step * dir.diag(i);
            hm.diag(i) -= step * dir.diag(i);
        }
        hp.upper(0, 1) += step * dir.upper(0, 1);
        hm.upper(0, 1) -= step * dir.upper(0, 1);
        HermMat fd = mat_exp(hp) - mat_exp(hm);
        for (int i = 0; i < 2; ++i) fd.diag(i) /= 2.0 * step;
        fd.upper(0, 1) /= 2.0 * step;
        worst = std::max(worst, (g - fd).frobenius_norm() /
                                    std::max(fd.frobenius_norm(), 1e-12));
    }
    CHECK(worst < 1e-4);
}
