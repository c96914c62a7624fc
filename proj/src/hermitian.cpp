#include "mulog/hermitian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mulog/parallel.hpp"

namespace mulog {

namespace {

// Dense complex working matrix, column-major, for the Jacobi kernel.
struct Dense {
    int d;
    std::vector<cplx> a;
    Dense(int dim) : d(dim), a(static_cast<std::size_t>(dim) * dim) {}
    cplx& at(int i, int j) { return a[static_cast<std::size_t>(j) * d + i]; }
    cplx at(int i, int j) const { return a[static_cast<std::size_t>(j) * d + i]; }
};

double offdiag_norm(const Dense& m) {
    double s = 0.0;
    for (int j = 0; j < m.d; ++j)
        for (int i = 0; i < m.d; ++i)
            if (i != j) s += std::norm(m.at(i, j));
    return std::sqrt(s);
}

} // namespace

double HermMat::frobenius_norm() const {
    double s = 0.0;
    for (int i = 0; i < d_; ++i) s += diag_[i] * diag_[i];
    for (const cplx& v : upper_) s += 2.0 * std::norm(v);
    return std::sqrt(s);
}

bool HermMat::finite() const {
    for (double v : diag_)
        if (!std::isfinite(v)) return false;
    for (const cplx& v : upper_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

HermMat& HermMat::operator+=(const HermMat& o) {
    if (o.d_ != d_) throw Error("HermMat: dimension mismatch in +=");
    for (int i = 0; i < d_; ++i) diag_[i] += o.diag_[i];
    for (std::size_t k = 0; k < upper_.size(); ++k) upper_[k] += o.upper_[k];
    return *this;
}

HermMat& HermMat::operator-=(const HermMat& o) {
    if (o.d_ != d_) throw Error("HermMat: dimension mismatch in -=");
    for (int i = 0; i < d_; ++i) diag_[i] -= o.diag_[i];
    for (std::size_t k = 0; k < upper_.size(); ++k) upper_[k] -= o.upper_[k];
    return *this;
}

HermStack::HermStack(std::size_t count, int dim)
    : n_(count), d_(dim), planes_(static_cast<std::size_t>(dim) * dim * count, 0.0) {}

int HermStack::re_plane(int i, int j) const {
    int k = j - i;
    int base = d_;
    for (int s = 1; s < k; ++s) base += 2 * (d_ - s);
    return base + 2 * i;
}

HermMat HermStack::get(std::size_t k) const {
    HermMat m(d_);
    for (int i = 0; i < d_; ++i) m.diag(i) = plane(i)[k];
    for (int off = 1; off < d_; ++off)
        for (int i = 0; i + off < d_; ++i) {
            int p = re_plane(i, i + off);
            m.upper(i, i + off) = cplx(plane(p)[k], plane(p + 1)[k]);
        }
    return m;
}

void HermStack::set(std::size_t k, const HermMat& m) {
    for (int i = 0; i < d_; ++i) plane(i)[k] = m.diag(i);
    for (int off = 1; off < d_; ++off)
        for (int i = 0; i + off < d_; ++i) {
            int p = re_plane(i, i + off);
            cplx v = m.upper(i, i + off);
            plane(p)[k] = v.real();
            plane(p + 1)[k] = v.imag();
        }
}

EigH eig_hermitian(const HermMat& m) {
    if (!m.finite()) throw InvalidDataError("eig_hermitian: non-finite entry");
    const int d = m.dim();
    EigH out;
    out.values.resize(d);
    out.vectors.assign(static_cast<std::size_t>(d) * d, cplx(0.0));
    if (d == 0) return out;
    if (d == 1) {
        out.values[0] = m.diag(0);
        out.vectors[0] = 1.0;
        return out;
    }

    Dense a(d), v(d);
    for (int j = 0; j < d; ++j) {
        v.at(j, j) = 1.0;
        for (int i = 0; i < d; ++i) a.at(i, j) = m.at(i, j);
    }

    const double scale = m.frobenius_norm();
    const double tol = 1e-14 * scale;
    if (scale > 0.0) {
        for (int sweep = 0; sweep < 30 && offdiag_norm(a) > tol; ++sweep) {
            for (int p = 0; p < d - 1; ++p) {
                for (int q = p + 1; q < d; ++q) {
                    cplx apq = a.at(p, q);
                    double mag = std::abs(apq);
                    if (mag <= 1e-300) continue;
                    // Unitary 2x2 rotation [[c, -s e^{i phi}], [s e^{-i phi}, c]]
                    // annihilating a(p, q); phi = arg(apq).
                    double app = a.at(p, p).real();
                    double aqq = a.at(q, q).real();
                    double tau = (app - aqq) / (2.0 * mag);
                    double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                    double c = 1.0 / std::sqrt(1.0 + t * t);
                    double s = t * c;
                    cplx ph = apq / mag;           // e^{i phi}
                    cplx sp = s * ph;              // s e^{i phi}
                    cplx spc = std::conj(sp);      // s e^{-i phi}

                    for (int r = 0; r < d; ++r) {
                        cplx arp = a.at(r, p), arq = a.at(r, q);
                        a.at(r, p) = c * arp + spc * arq;
                        a.at(r, q) = -sp * arp + c * arq;
                    }
                    for (int r = 0; r < d; ++r) {
                        cplx apr = a.at(p, r), aqr = a.at(q, r);
                        a.at(p, r) = c * apr + sp * aqr;
                        a.at(q, r) = -spc * apr + c * aqr;
                    }
                    a.at(p, q) = 0.0;
                    a.at(q, p) = 0.0;
                    a.at(p, p) = cplx(a.at(p, p).real(), 0.0);
                    a.at(q, q) = cplx(a.at(q, q).real(), 0.0);

                    for (int r = 0; r < d; ++r) {
                        cplx vrp = v.at(r, p), vrq = v.at(r, q);
                        v.at(r, p) = c * vrp + spc * vrq;
                        v.at(r, q) = -sp * vrp + c * vrq;
                    }
                }
            }
        }
    }

    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> ev(d);
    for (int i = 0; i < d; ++i) ev[i] = a.at(i, i).real();
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return ev[x] < ev[y]; });

    for (int j = 0; j < d; ++j) {
        int src = order[j];
        out.values[j] = ev[src];
        // Phase convention: largest-magnitude entry real positive.
        int arg = 0;
        double best = -1.0;
        for (int i = 0; i < d; ++i) {
            double mag = std::abs(v.at(i, src));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        cplx ph(1.0, 0.0);
        if (best > 0.0) ph = std::conj(v.at(arg, src)) / best;
        for (int i = 0; i < d; ++i)
            out.vectors[static_cast<std::size_t>(j) * d + i] = v.at(i, src) * ph;
    }
    return out;
}

double pd_floor(double trace, int d) {
    return 1e-12 * std::max(trace / d, 1.0);
}

double min_eigenvalue(const HermMat& m) {
    if (m.dim() == 1) return m.diag(0);
    if (m.dim() == 2) {
        double a = m.diag(0), b = m.diag(1);
        double delta = std::sqrt(4.0 * std::norm(m.upper(0, 1)) + (a - b) * (a - b));
        return 0.5 * (a + b - delta);
    }
    return eig_hermitian(m).values.front();
}

namespace {

// Rebuild sum_k f(lambda_k) e_k e_k^H into Hermitian storage.
HermMat assemble(const EigH& eg, const std::vector<double>& f, int d) {
    HermMat out(d);
    for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int k = 0; k < d; ++k) acc += f[k] * std::norm(eg.vectors[static_cast<std::size_t>(k) * d + i]);
        out.diag(i) = acc;
    }
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            cplx acc(0.0);
            for (int k = 0; k < d; ++k)
                acc += f[k] * eg.vectors[static_cast<std::size_t>(k) * d + i] *
                       std::conj(eg.vectors[static_cast<std::size_t>(k) * d + j]);
            out.upper(i, j) = acc;
        }
    return out;
}

} // namespace

HermMat mat_log(const HermMat& m) {
    const int d = m.dim();
    if (d == 1) {
        double a = m.diag(0);
        if (!(a > pd_floor(a, 1)))
            throw NotPositiveDefiniteError("mat_log: value " + std::to_string(a) + " not positive definite");
        HermMat out(1);
        out.diag(0) = std::log(a);
        return out;
    }
    EigH eg = eig_hermitian(m);
    double floor = pd_floor(m.trace(), d);
    std::vector<double> f(d);
    for (int k = 0; k < d; ++k) {
        if (!(eg.values[k] > floor))
            throw NotPositiveDefiniteError("mat_log: eigenvalue " + std::to_string(eg.values[k]) +
                                           " below positive-definiteness floor");
        f[k] = std::log(eg.values[k]);
    }
    return assemble(eg, f, d);
}

HermMat mat_exp(const HermMat& m) {
    const int d = m.dim();
    if (d == 1) {
        if (m.diag(0) > kExpOverflowLimit)
            throw OverflowError("mat_exp: eigenvalue exceeds exp overflow limit 709");
        HermMat out(1);
        out.diag(0) = std::exp(m.diag(0));
        return out;
    }
    EigH eg = eig_hermitian(m);
    std::vector<double> f(d);
    for (int k = 0; k < d; ++k) {
        if (eg.values[k] > kExpOverflowLimit)
            throw OverflowError("mat_exp: eigenvalue exceeds exp overflow limit 709");
        f[k] = std::exp(eg.values[k]);
    }
    return assemble(eg, f, d);
}

HermStack mat_log(const HermStack& s) {
    HermStack out(s.count(), s.dim());
    if (s.dim() == 2) {
        mat_log_2x2(s.plane(0), s.plane(1), s.plane(2), s.plane(3),
                    out.plane(0), out.plane(1), out.plane(2), out.plane(3), s.count());
        return out;
    }
    parallel_for(s.count(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            try {
                out.set(k, mat_log(s.get(k)));
            } catch (const Error& err) {
                throw NotPositiveDefiniteError(
                    std::string(err.what()) + " (pixel " + std::to_string(k) + ")",
                    static_cast<long>(k));
            }
        }
    });
    return out;
}

HermStack mat_exp(const HermStack& s) {
    HermStack out(s.count(), s.dim());
    if (s.dim() == 2) {
        mat_exp_2x2(s.plane(0), s.plane(1), s.plane(2), s.plane(3),
                    out.plane(0), out.plane(1), out.plane(2), out.plane(3), s.count());
        return out;
    }
    parallel_for(s.count(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            try {
                out.set(k, mat_exp(s.get(k)));
            } catch (const Error& err) {
                throw OverflowError(std::string(err.what()) + " (pixel " + std::to_string(k) + ")");
            }
        }
    });
    return out;
}

void mat_log_2x2(const double* a, const double* b, const double* cre, const double* cim,
                 double* la, double* lb, double* lcre, double* lcim, std::size_t n) {
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            double aa = a[k], bb = b[k];
            double cr = cre[k], ci = cim[k];
            double tr = aa + bb;
            double delta = std::sqrt(4.0 * (cr * cr + ci * ci) + (aa - bb) * (aa - bb));
            double floor = pd_floor(tr, 2);
            double lmin = 0.5 * (tr - delta);
            if (!(lmin > floor))
                throw NotPositiveDefiniteError(
                    "mat_log: eigenvalue " + std::to_string(lmin) +
                        " below positive-definiteness floor (pixel " + std::to_string(k) + ")",
                    static_cast<long>(k));
            if (delta < 1e-12 * tr) {
                // Coincident eigenvalues: log acts as the scalar log of tr/2.
                double m = 0.5 * tr;
                double lm = std::log(m);
                la[k] = lm;
                lb[k] = lm;
                lcre[k] = cr / m;
                lcim[k] = ci / m;
                continue;
            }
            double l1 = std::log(0.5 * (tr + delta));
            double l2 = std::log(0.5 * (tr - delta));
            double inv = 1.0 / (2.0 * delta);
            la[k] = ((aa - bb + delta) * l1 - (aa - bb - delta) * l2) * inv;
            lb[k] = ((bb - aa + delta) * l1 - (bb - aa - delta) * l2) * inv;
            double w = (l1 - l2) / delta;
            lcre[k] = cr * w;
            lcim[k] = ci * w;
        }
    });
}

void mat_exp_2x2(const double* a, const double* b, const double* cre, const double* cim,
                 double* ea, double* eb, double* ecre, double* ecim, std::size_t n) {
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            double aa = a[k], bb = b[k];
            double cr = cre[k], ci = cim[k];
            double tr = aa + bb;
            double delta = std::sqrt(4.0 * (cr * cr + ci * ci) + (aa - bb) * (aa - bb));
            double lmax = 0.5 * (tr + delta);
            if (lmax > kExpOverflowLimit)
                throw OverflowError("mat_exp: eigenvalue exceeds exp overflow limit 709 (pixel " +
                                    std::to_string(k) + ")");
            if (delta < 1e-12 * std::abs(tr) || delta < 1e-300) {
                double m = std::exp(0.5 * tr);
                ea[k] = m;
                eb[k] = m;
                ecre[k] = cr * m;
                ecim[k] = ci * m;
                continue;
            }
            double e1 = std::exp(0.5 * (tr + delta));
            double e2 = std::exp(0.5 * (tr - delta));
            double inv = 1.0 / (2.0 * delta);
            ea[k] = ((aa - bb + delta) * e1 - (aa - bb - delta) * e2) * inv;
            eb[k] = ((bb - aa + delta) * e1 - (bb - aa - delta) * e2) * inv;
            double w = (e1 - e2) / delta;
            ecre[k] = cr * w;
            ecim[k] = ci * w;
        }
    });
}

HermMat exp_directional_derivative(const HermMat& h, const HermMat& dh, int q) {
    if (q < 1) throw Error("exp_directional_derivative: q must be >= 1");
    if (h.dim() != dh.dim()) throw Error("exp_directional_derivative: dimension mismatch");
    const int d = h.dim();
    EigH eg = eig_hermitian(h);

    // In the eigenbasis the midpoint sum collapses entrywise:
    //   (1/q) sum_t e^{u_t li} G_ij e^{(1-u_t) lj} = G_ij e^{lj} S(li - lj)
    // with S(x) = (1/q) sum_t e^{u_t x}, evaluated in closed form.
    Dense g(d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) {
            cplx acc(0.0);
            for (int r = 0; r < d; ++r)
                for (int s = 0; s < d; ++s)
                    acc += std::conj(eg.vectors[static_cast<std::size_t>(i) * d + r]) * dh.at(r, s) *
                           eg.vectors[static_cast<std::size_t>(j) * d + s];
            g.at(i, j) = acc;
        }

    auto midpoint_sum = [q](double x) {
        // (1/q) sum_{t=1..q} e^{(t - 1/2) x / q}; stable near x = 0 and for
        // large positive x (no inf/inf).
        if (std::abs(x) < 1e-9) return 1.0 + 0.5 * x;
        double t = x / q;
        if (t > 300.0) return std::exp(std::min(x - 0.5 * t, 700.0)) / q;
        return std::exp(0.5 * t) * std::expm1(x) / (q * std::expm1(t));
    };

    Dense s(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            s.at(i, j) = g.at(i, j) * (std::exp(eg.values[j]) * midpoint_sum(eg.values[i] - eg.values[j]));

    HermMat out(d);
    for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c)
                acc += (eg.vectors[static_cast<std::size_t>(r) * d + i] * s.at(r, c) *
                        std::conj(eg.vectors[static_cast<std::size_t>(c) * d + i]))
                           .real();
        out.diag(i) = acc;
    }
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            cplx acc(0.0);
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c)
                    acc += eg.vectors[static_cast<std::size_t>(r) * d + i] * s.at(r, c) *
                           std::conj(eg.vectors[static_cast<std::size_t>(c) * d + j]);
            out.upper(i, j) = acc;
        }
    return out;
}

} // namespace mulog
