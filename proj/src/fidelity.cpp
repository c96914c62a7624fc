#include "mulog/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mulog/rng.hpp"
#include "mulog/statistics.hpp"

namespace mulog {

namespace {

void check_problem(const FidelityProblem& p) {
    if (!p.basis) throw Error("fidelity: problem has no basis");
    const std::size_t nch = static_cast<std::size_t>(p.basis->channels());
    if (p.y.size() != nch || p.a.size() != nch)
        throw Error("fidelity: channel vector length mismatch");
    if (!(p.beta > 0.0)) throw Error("fidelity: beta must be > 0");
    if (!(p.looks > 0.0)) throw Error("fidelity: looks must be > 0");
    if (p.q < 0) throw Error("fidelity: q must be >= 0");
    for (double v : p.y)
        if (!std::isfinite(v)) throw InvalidDataError("fidelity: non-finite y channel");
    for (double v : p.a)
        if (!std::isfinite(v)) throw InvalidDataError("fidelity: non-finite anchor channel");
}

// (1/q) sum_{t=1..q} e^{(t-1/2) x / q}, the midpoint sum of e^{ux} on [0, 1].
// Large positive x takes the asymptotic branch so no inf/inf forms.
double midpoint_sum(double x, int q) {
    if (std::abs(x) < 1e-9) return 1.0 + 0.5 * x;
    double t = x / q;
    if (t > 300.0) return std::exp(std::min(x - 0.5 * t, 700.0)) / q;
    return std::exp(0.5 * t) * std::expm1(x) / (q * std::expm1(t));
}

// The q-point approximation of
//   integral_0^1 e^{(u-1) H} B e^{-u H} du,  H = Omega(x), B = exp(Omega(y)),
// assembled in H's eigenbasis where the u-sum collapses entrywise:
//   M_ij = G_ij e^{-l_i} S(l_i - l_j),  G = E^H B E.
// Hermitian by the midpoint symmetry u -> 1-u; storage keeps it exact.
HermMat quadrature_integral(const HermMat& hx, const HermMat& b, int q) {
    const int d = hx.dim();
    EigH eg = eig_hermitian(hx);
    std::vector<cplx> g(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            cplx acc(0.0);
            for (int r = 0; r < d; ++r)
                for (int s = 0; s < d; ++s)
                    acc += std::conj(eg.vectors[static_cast<std::size_t>(i) * d + r]) * b.at(r, s) *
                           eg.vectors[static_cast<std::size_t>(j) * d + s];
            g[static_cast<std::size_t>(i) * d + j] = acc;
        }
    std::vector<cplx> m(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            m[static_cast<std::size_t>(i) * d + j] =
                g[static_cast<std::size_t>(i) * d + j] *
                (std::exp(std::min(-eg.values[i], 700.0)) *
                 midpoint_sum(eg.values[i] - eg.values[j], q));

    HermMat out(d);
    for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c)
                acc += (eg.vectors[static_cast<std::size_t>(r) * d + i] *
                        m[static_cast<std::size_t>(r) * d + c] *
                        std::conj(eg.vectors[static_cast<std::size_t>(c) * d + i]))
                           .real();
        out.diag(i) = acc;
    }
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            cplx acc(0.0);
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c)
                    acc += eg.vectors[static_cast<std::size_t>(r) * d + i] *
                           m[static_cast<std::size_t>(r) * d + c] *
                           std::conj(eg.vectors[static_cast<std::size_t>(c) * d + j]);
            out.upper(i, j) = acc;
        }
    return out;
}

// q = 0 surrogate exp(Omega(y) - Omega(x)); exact when the two commute.
HermMat commuting_surrogate(const HermMat& hx, const HermMat& hy) {
    return mat_exp(hy - hx);
}

struct StepParts {
    std::vector<double> numerator;
    std::vector<double> denominator;
};

// Loop-invariant pieces of one pixel's subproblem: Omega(y) and its
// exponential stay fixed while x moves, so hoist them out of the iteration.
struct SolverCtx {
    const FidelityProblem* p;
    HermMat hy;
    HermMat b; // e^{Omega(y)}
};

SolverCtx make_ctx(const FidelityProblem& p) {
    SolverCtx ctx;
    ctx.p = &p;
    ctx.hy = omega(p.y, *p.basis);
    ctx.b = mat_exp(ctx.hy);
    return ctx;
}

StepParts ctx_step_parts(const SolverCtx& ctx, const std::vector<double>& x) {
    const FidelityProblem& p = *ctx.p;
    const ChannelBasis& basis = *p.basis;
    const int nch = basis.channels();
    HermMat hx = omega(x, basis);
    HermMat integral = p.q == 0 ? commuting_surrogate(hx, ctx.hy)
                                : quadrature_integral(hx, ctx.b, p.q);
    HermMat residual = HermMat::identity(basis.dim) - integral;
    std::vector<double> grad_term = omega_adjoint(residual, basis);
    std::vector<double> curv_term = omega_adjoint(integral, basis);
    StepParts parts;
    parts.numerator.resize(nch);
    parts.denominator.resize(nch);
    for (int i = 0; i < nch; ++i) {
        parts.numerator[i] = p.beta * (x[i] - p.a[i]) + p.looks * grad_term[i];
        double den = std::abs(p.beta + p.looks * curv_term[i]);
        parts.denominator[i] = std::max(den, 1e-12 * p.beta);
    }
    return parts;
}

// 0.5 beta ||x - a||^2 + L (tr Omega(x) + tr(e^{Omega(y)} e^{-Omega(x)})).
double ctx_objective(const SolverCtx& ctx, const std::vector<double>& x) {
    const FidelityProblem& p = *ctx.p;
    const ChannelBasis& basis = *p.basis;
    const int d = basis.dim;
    HermMat hx = omega(x, basis);
    EigH eg = eig_hermitian(hx);
    double tr = hx.trace();
    for (int i = 0; i < d; ++i) {
        cplx gii(0.0);
        for (int r = 0; r < d; ++r)
            for (int s = 0; s < d; ++s)
                gii += std::conj(eg.vectors[static_cast<std::size_t>(i) * d + r]) *
                       ctx.b.at(r, s) * eg.vectors[static_cast<std::size_t>(i) * d + s];
        tr += std::exp(std::min(-eg.values[i], 700.0)) * gii.real();
    }
    double quad = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double diff = x[i] - p.a[i];
        quad += diff * diff;
    }
    return 0.5 * p.beta * quad + p.looks * tr;
}

} // namespace

// The curvature surrogate in the update denominator can cancel to ~0 on real
// data, which would let a single update jump by hundreds of log units and
// overflow the quadrature. Two guards keep the iteration sane: each channel
// moves at most kMaxChannelStep per update, and a step that raises the
// subproblem objective beyond a 1e-12-relative slack is halved up to
// kBacktracks times (then the iteration stops at the current point). The
// slack matters near convergence, where true per-step decreases drop below
// the objective's floating-point resolution: without it the iteration would
// stall at ~1e-8 accuracy instead of polishing to machine precision.
// Divergent jumps raise the objective by far more than the slack and are
// still rejected. Well-conditioned problems trigger neither guard and follow
// the plain quasi-Newton trajectory.
constexpr double kMaxChannelStep = 3.0;
constexpr int kBacktracks = 8;
constexpr double kAcceptSlack = 1e-12;

double newton_scalar(double y, double a, double beta, double looks, int iters,
                     const double* init) {
    if (!std::isfinite(y) || !std::isfinite(a))
        throw InvalidDataError("newton_scalar: non-finite input");
    if (init && !std::isfinite(*init))
        throw InvalidDataError("newton_scalar: non-finite init");
    if (!(beta > 0.0) || !(looks > 0.0))
        throw Error("newton_scalar: beta and looks must be > 0");
    // e^{y - v} is evaluated as e^y * e^{-v} with the same clamps as the
    // d = 1 matrix context, so the two solvers follow identical
    // floating-point trajectories and agree bitwise on shared problems. The
    // clamps keep evaluations finite instead of producing inf on extreme
    // anchors; overflow in the product itself is caught by the finiteness
    // check in the backtracking loop.
    const double ey = std::exp(std::min(y, 700.0));
    auto ex = [&](double v) { return ey * std::exp(std::min(-v, 700.0)); };
    auto obj = [&](double v) {
        double diff = v - a;
        double tr = v + ex(v);
        return 0.5 * beta * (diff * diff) + looks * tr;
    };
    double x = init ? *init : y;
    double fx = obj(x);
    for (int it = 0; it < iters; ++it) {
        double e = ex(x);
        double num = beta * (x - a) + looks * (1.0 - e);
        double den = std::max(std::abs(beta + looks * e), 1e-12 * beta);
        double delta = std::clamp(num / den, -kMaxChannelStep, kMaxChannelStep);
        double scale = 1.0;
        bool moved = false;
        double slack = kAcceptSlack * std::max(std::abs(fx), 1.0);
        for (int bt = 0; bt < kBacktracks; ++bt) {
            double trial = x - scale * delta;
            double ft = obj(trial);
            if (std::isfinite(ft) && ft <= fx + slack) {
                x = trial;
                fx = ft;
                moved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!moved) break;
    }
    return x;
}

std::vector<double> newton_step(const FidelityProblem& p, const std::vector<double>& x) {
    check_problem(p);
    SolverCtx ctx = make_ctx(p);
    StepParts parts = ctx_step_parts(ctx, x);
    std::vector<double> step(parts.numerator.size());
    for (std::size_t i = 0; i < step.size(); ++i)
        step[i] = std::clamp(parts.numerator[i] / parts.denominator[i], -kMaxChannelStep,
                             kMaxChannelStep);
    return step;
}

std::vector<double> newton_matrix(const FidelityProblem& p, int iters,
                                  const std::vector<double>* init) {
    check_problem(p);
    if (init) {
        if (init->size() != p.y.size()) throw Error("newton_matrix: init length mismatch");
        for (double v : *init)
            if (!std::isfinite(v)) throw InvalidDataError("newton_matrix: non-finite init channel");
    }
    SolverCtx ctx = make_ctx(p);
    std::vector<double> x = init ? *init : p.y;
    double fx = ctx_objective(ctx, x);
    std::vector<double> trial(x.size());
    for (int it = 0; it < iters; ++it) {
        StepParts parts = ctx_step_parts(ctx, x);
        double scale = 1.0;
        bool moved = false;
        double slack = kAcceptSlack * std::max(std::abs(fx), 1.0);
        for (int bt = 0; bt < kBacktracks; ++bt) {
            for (std::size_t i = 0; i < x.size(); ++i)
                trial[i] = x[i] - scale * std::clamp(parts.numerator[i] / parts.denominator[i],
                                                     -kMaxChannelStep, kMaxChannelStep);
            double ft = ctx_objective(ctx, trial);
            if (std::isfinite(ft) && ft <= fx + slack) {
                x.swap(trial);
                fx = ft;
                moved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!moved) break;
    }
    return x;
}

std::vector<double> nll_gradient(const FidelityProblem& p, const std::vector<double>& x) {
    check_problem(p);
    if (p.q < 1) throw Error("nll_gradient: q must be >= 1");
    SolverCtx ctx = make_ctx(p);
    StepParts parts = ctx_step_parts(ctx, x);
    return parts.numerator;
}

std::vector<double> hessian_diag_approx(const FidelityProblem& p, const std::vector<double>& x) {
    check_problem(p);
    if (p.q < 1) throw Error("hessian_diag_approx: q must be >= 1");
    const ChannelBasis& basis = *p.basis;
    SolverCtx ctx = make_ctx(p);
    HermMat hx = omega(x, basis);
    HermMat integral = quadrature_integral(hx, ctx.b, p.q);
    std::vector<double> curv = omega_adjoint(integral, basis);
    std::vector<double> out(curv.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::abs(p.beta + p.looks * curv[i]);
    return out;
}

double fidelity_objective(const FidelityProblem& p, const std::vector<double>& x) {
    check_problem(p);
    SolverCtx ctx = make_ctx(p);
    return ctx_objective(ctx, x);
}

SolverAccuracy solver_accuracy_experiment(const std::vector<int>& dims,
                                          const std::vector<int>& qs, int trials,
                                          std::uint64_t seed) {
    SolverAccuracy out;
    out.dims = dims;
    out.qs = qs;
    out.residual.assign(dims.size(), std::vector<double>(qs.size(), 0.0));

    for (std::size_t di = 0; di < dims.size(); ++di) {
        const int d = dims[di];
        const int looks = d;
        ChannelBasis basis = ChannelBasis::identity(d);
        std::vector<double> sums(qs.size(), 0.0);
        for (int trial = 0; trial < trials; ++trial) {
            std::uint64_t stream = (static_cast<std::uint64_t>(d) << 32) | static_cast<std::uint64_t>(trial);
            Philox rng(seed, stream);

            // Random ground truth Sigma = G G^H / m with G of size d x m,
            // m = 8 d, circular standard normal entries: a normalized Wishart
            // draw whose conditioning stays bounded as d grows. Then one
            // observed Wishart draw with L = d looks.
            const int m = 8 * d;
            std::vector<cplx> gmat(static_cast<std::size_t>(d) * m);
            const double inv_sqrt2 = 0.70710678118654752440;
            for (auto& v : gmat) v = cplx(rng.normal() * inv_sqrt2, rng.normal() * inv_sqrt2);
            HermMat sigma(d);
            for (int i = 0; i < d; ++i) {
                double acc = 0.0;
                for (int k = 0; k < m; ++k) acc += std::norm(gmat[static_cast<std::size_t>(i) * m + k]);
                sigma.diag(i) = acc / m;
            }
            for (int i = 0; i < d; ++i)
                for (int j = i + 1; j < d; ++j) {
                    cplx acc(0.0);
                    for (int k = 0; k < m; ++k)
                        acc += gmat[static_cast<std::size_t>(i) * m + k] *
                               std::conj(gmat[static_cast<std::size_t>(j) * m + k]);
                    sigma.upper(i, j) = acc / static_cast<double>(m);
                }

            HermMat c = sample_wishart(sigma, looks, seed ^ 0x5bf03635u, stream);

            FidelityProblem p;
            p.basis = &basis;
            p.beta = 10.0 * looks;
            p.looks = looks;
            p.y = kappa_inv(mat_log(c));
            p.a = kappa_inv(mat_log(sigma));

            for (std::size_t qi = 0; qi < qs.size(); ++qi) {
                // plain (unguarded) updates: the measurement characterizes the
                // bare iteration, and beta = 10 L keeps it stable without the
                // backtracking used in the ADMM path
                p.q = qs[qi];
                std::vector<double> x = p.y;
                for (int it = 0; it < 10; ++it) {
                    std::vector<double> step = newton_step(p, x);
                    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= step[i];
                }
                p.q = 100;
                std::vector<double> ref_step = newton_step(p, x);
                double num = 0.0, den = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    num += ref_step[i] * ref_step[i];
                    den += x[i] * x[i];
                }
                sums[qi] += std::sqrt(num) / std::sqrt(den);
            }
        }
        for (std::size_t qi = 0; qi < qs.size(); ++qi)
            out.residual[di][qi] = sums[qi] / trials;
    }
    return out;
}

} // namespace mulog
