#include <doctest.h>

#include <cmath>
#include <vector>

#include "mulog/channelizer.hpp"
#include "mulog/errors.hpp"
#include "mulog/fidelity.hpp"
#include "mulog/rng.hpp"

using namespace mulog;

namespace {

// independent root of beta (x - a) + L (1 - e^{y - x}) = 0, by bisection
double bisect_root(double y, double a, double beta, double looks) {
    auto g = [&](double x) { return beta * (x - a) + looks * (1.0 - std::exp(y - x)); };
    double lo = std::min(y, a) - 50.0, hi = std::max(y, a) + 50.0;
    REQUIRE(g(lo) < 0.0);
    REQUIRE(g(hi) > 0.0);
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

FidelityProblem make_problem(const ChannelBasis& basis, Philox& rng, double beta, double looks,
                             double scale = 0.6) {
    FidelityProblem p;
    p.basis = &basis;
    p.beta = beta;
    p.looks = looks;
    int nch = basis.channels();
    p.y.resize(nch);
    p.a.resize(nch);
    for (int c = 0; c < nch; ++c) {
        p.y[c] = scale * rng.normal();
        p.a[c] = scale * rng.normal();
    }
    return p;
}

std::vector<double> fd_gradient(const FidelityProblem& p, const std::vector<double>& x,
                                double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::vector<double> xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (fidelity_objective(p, xp) - fidelity_objective(p, xm)) / (2.0 * h);
    }
    return g;
}

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

TEST_CASE("scalar Newton solve: limits and a frozen reference root") {
    // overwhelming quadratic term pins the solution at the anchor
    CHECK(newton_scalar(0.3, -0.8, 1e12, 1.0) == doctest::Approx(-0.8).epsilon(1e-9));

    // symmetric point: x = 0 solves beta x + L (1 - e^{-x}) = 0 at y = a = 0
    CHECK(std::abs(newton_scalar(0.0, 0.0, 1.0, 1.0)) < 1e-10);

    // beta = L = 1, y = 1, a = 0: root of x + 1 - e^{1 - x}; frozen value
    double root = bisect_root(1.0, 0.0, 1.0, 1.0);
    CHECK(root == doctest::Approx(0.5571455989976115).epsilon(1e-10));
    CHECK(newton_scalar(1.0, 0.0, 1.0, 1.0) == doctest::Approx(root).epsilon(1e-10));

    // random instances: the stationarity residual is tiny after 10 iterations
    Philox rng(81, 0);
    double worst = 0.0;
    for (int t = 0; t < 500; ++t) {
        double y = 3.0 * (rng.uniform() - 0.5);
        double a = 3.0 * (rng.uniform() - 0.5);
        double beta = 0.5 + 4.0 * rng.uniform();
        double looks = (t % 2) ? 1.0 : 4.0;
        double x = newton_scalar(y, a, beta, looks);
        double resid = beta * (x - a) + looks * (1.0 - std::exp(y - x));
        worst = std::max(worst, std::abs(resid) / (beta + looks));
    }
    CHECK(worst < 1e-8);

    // a supplied init at the solution stays put
    double fixed = newton_scalar(1.0, 0.0, 1.0, 1.0);
    CHECK(newton_scalar(1.0, 0.0, 1.0, 1.0, 10, &fixed) ==
          doctest::Approx(fixed).epsilon(1e-14));

    CHECK_THROWS_AS(newton_scalar(0.0, 0.0, -1.0, 1.0), Error);
    CHECK_THROWS_AS(newton_scalar(std::nan(""), 0.0, 1.0, 1.0), InvalidDataError);
}

TEST_CASE("matrix Newton solve at d = 1 reproduces the scalar solver") {
    ChannelBasis basis = ChannelBasis::identity(1);
    Philox rng(83, 0);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        FidelityProblem p = make_problem(basis, rng, 0.5 + 4.0 * rng.uniform(),
                                         (t % 3) ? 1.0 : 3.0, 1.2);
        double scalar = newton_scalar(p.y[0], p.a[0], p.beta, p.looks);
        std::vector<double> mat = newton_matrix(p);
        worst = std::max(worst, std::abs(mat[0] - scalar));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("matrix Newton solve converges on commuting (diagonal) problems") {
    ChannelBasis basis = ChannelBasis::identity(2);
    Philox rng(87, 0);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        FidelityProblem p = make_problem(basis, rng, 1.0 + 2.0 * rng.uniform(), 2.0, 0.8);
        // zero the off-diagonal channels so Omega(x) and Omega(y) commute
        p.y[2] = p.y[3] = 0.0;
        p.a[2] = p.a[3] = 0.0;
        std::vector<double> x = newton_matrix(p);
        worst = std::max(worst, norm(nll_gradient(p, x)));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("gradient vanishes at the data and matches the d = 1 closed form") {
    ChannelBasis b2 = ChannelBasis::identity(2);
    Philox rng(91, 0);
    for (int t = 0; t < 20; ++t) {
        FidelityProblem p = make_problem(b2, rng, 2.0, 3.0);
        p.a = p.y;
        std::vector<double> g = nll_gradient(p, p.y);
        // beta (x - a) = 0 and the likelihood part telescopes to zero
        for (double v : g) CHECK(std::abs(v) < 1e-12);
    }

    ChannelBasis b1 = ChannelBasis::identity(1);
    for (int t = 0; t < 100; ++t) {
        FidelityProblem p = make_problem(b1, rng, 0.5 + rng.uniform(), 2.0, 1.5);
        std::vector<double> x{0.8 * rng.normal()};
        double expect = p.beta * (x[0] - p.a[0]) + p.looks * (1.0 - std::exp(p.y[0] - x[0]));
        CHECK(nll_gradient(p, x)[0] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("gradient agrees with finite differences of the objective") {
    Philox rng(93, 0);
    for (int d : {1, 2, 3}) {
        CAPTURE(d);
        ChannelBasis basis = ChannelBasis::identity(d);
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            FidelityProblem p = make_problem(basis, rng, 0.5 + 3.0 * rng.uniform(),
                                             (t % 2) ? 1.0 : 2.0);
            p.q = 100; // high-order quadrature so the analytic path is exact
            std::vector<double> x(p.y.size());
            for (auto& v : x) v = 0.6 * rng.normal();
            std::vector<double> g = nll_gradient(p, x);
            std::vector<double> fd = fd_gradient(p, x);
            std::vector<double> diff(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) diff[i] = g[i] - fd[i];
            worst = std::max(worst, norm(diff) / std::max(norm(fd), 1.0));
        }
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("gradient respects a generic stabilizing basis") {
    Philox rng(95, 0);
    ChannelBasis basis = ChannelBasis::identity(2);
    for (auto& v : basis.b) v = 0.2 * rng.normal();
    for (auto& v : basis.phi) v = 0.5 + rng.uniform();
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        FidelityProblem p = make_problem(basis, rng, 2.0, 2.0, 0.5);
        p.q = 100;
        std::vector<double> x(p.y.size());
        for (auto& v : x) v = 0.4 * rng.normal();
        std::vector<double> g = nll_gradient(p, x);
        std::vector<double> fd = fd_gradient(p, x);
        std::vector<double> diff(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) diff[i] = g[i] - fd[i];
        worst = std::max(worst, norm(diff) / std::max(norm(fd), 1.0));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("diagonal curvature model: closed form at d = 1, positive in general") {
    ChannelBasis b1 = ChannelBasis::identity(1);
    Philox rng(97, 0);
    for (int t = 0; t < 100; ++t) {
        FidelityProblem p = make_problem(b1, rng, 0.5 + 2.0 * rng.uniform(), 3.0, 1.0);
        std::vector<double> x{rng.normal()};
        double expect = p.beta + p.looks * std::exp(p.y[0] - x[0]);
        CHECK(hessian_diag_approx(p, x)[0] == doctest::Approx(expect).epsilon(1e-12));
    }

    ChannelBasis b3 = ChannelBasis::identity(3);
    for (int t = 0; t < 100; ++t) {
        FidelityProblem p = make_problem(b3, rng, 1.5, 2.0);
        std::vector<double> x(p.y.size());
        for (auto& v : x) v = 0.5 * rng.normal();
        for (double h : hessian_diag_approx(p, x)) CHECK(h > 0.0);
    }
}

TEST_CASE("quadrature refinement improves the Newton step monotonically") {
    Philox rng(99, 0);
    for (int d : {2, 3}) {
        CAPTURE(d);
        ChannelBasis basis = ChannelBasis::identity(d);
        int trend_ok = 0, trials = 40;
        for (int t = 0; t < trials; ++t) {
            FidelityProblem p = make_problem(basis, rng, 2.0, double(d));
            std::vector<double> x(p.y.size());
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = p.y[i] + 0.3 * rng.normal();
            FidelityProblem pref = p;
            pref.q = 100;
            std::vector<double> ref = newton_step(pref, x);
            double prev = 1e300;
            bool ok = true;
            for (int q : {1, 2, 4, 8, 16}) {
                FidelityProblem pq = p;
                pq.q = q;
                std::vector<double> step = newton_step(pq, x);
                std::vector<double> diff(step.size());
                for (std::size_t i = 0; i < step.size(); ++i) diff[i] = step[i] - ref[i];
                double err = norm(diff);
                if (err > prev * 1.10) ok = false; // allow 10% slack on the decay
                prev = err;
            }
            if (ok) ++trend_ok;
        }
        // the trend holds on the overwhelming majority of random instances
        CHECK(trend_ok >= trials * 9 / 10);
    }
}

TEST_CASE("guarded iteration never increases the objective") {
    Philox rng(103, 0);
    ChannelBasis basis = ChannelBasis::identity(2);
    int descents = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        FidelityProblem p = make_problem(basis, rng, 0.3 + 3.0 * rng.uniform(),
                                         (t % 2) ? 1.0 : 2.0, 1.0);
        std::vector<double> x = newton_matrix(p);
        if (fidelity_objective(p, x) <= fidelity_objective(p, p.y) + 1e-12) ++descents;
    }
    CHECK(descents >= trials * 99 / 100);
}

TEST_CASE("solver accuracy experiment: shape, determinism, q refinement") {
    std::vector<int> dims{2, 4};
    std::vector<int> qs{0, 1, 4};
    SolverAccuracy a = solver_accuracy_experiment(dims, qs, 5, 42);
    SolverAccuracy b = solver_accuracy_experiment(dims, qs, 5, 42);
    REQUIRE(a.dims == dims);
    REQUIRE(a.qs == qs);
    REQUIRE(a.residual.size() == dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) {
        REQUIRE(a.residual[i].size() == qs.size());
        for (std::size_t j = 0; j < qs.size(); ++j) {
            CHECK(a.residual[i][j] == b.residual[i][j]);
            CHECK(a.residual[i][j] >= 0.0);
            CHECK(std::isfinite(a.residual[i][j]));
        }
        // more quadrature nodes give a more accurate stationary point
        CHECK(a.residual[i][2] <= a.residual[i][1]);
    }
}
