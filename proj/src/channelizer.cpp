#include "mulog/channelizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mulog/convolve.hpp"
#include "mulog/parallel.hpp"

namespace mulog {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kMadScale = 1.4826;

// Channel p of alpha <-> plane p of the raw-entry stack. Diagonals map 1:1,
// off-diagonal (re, im) planes scale by sqrt(2); both orderings coincide.
void check_alpha_dim(std::size_t len, int d, const char* who) {
    if (len != static_cast<std::size_t>(d) * d)
        throw Error(std::string(who) + ": alpha length must be d^2");
}

} // namespace

ChannelBasis ChannelBasis::identity(int d) {
    ChannelBasis basis;
    basis.dim = d;
    int n = d * d;
    basis.a.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) basis.a[static_cast<std::size_t>(i) * n + i] = 1.0;
    basis.b.assign(n, 0.0);
    basis.phi.assign(n, 1.0);
    return basis;
}

HermMat kappa(const std::vector<double>& alpha, int d) {
    check_alpha_dim(alpha.size(), d, "kappa");
    HermMat m(d);
    for (int i = 0; i < d; ++i) m.diag(i) = alpha[i];
    int p = d;
    for (int off = 1; off < d; ++off)
        for (int i = 0; i + off < d; ++i) {
            m.upper(i, i + off) = cplx(alpha[p], alpha[p + 1]) / kSqrt2;
            p += 2;
        }
    return m;
}

std::vector<double> kappa_inv(const HermMat& m) {
    const int d = m.dim();
    std::vector<double> alpha(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i) alpha[i] = m.diag(i);
    int p = d;
    for (int off = 1; off < d; ++off)
        for (int i = 0; i + off < d; ++i) {
            cplx v = m.upper(i, i + off) * kSqrt2;
            alpha[p] = v.real();
            alpha[p + 1] = v.imag();
            p += 2;
        }
    return alpha;
}

HermMat omega(const std::vector<double>& x, const ChannelBasis& basis) {
    const int n = basis.channels();
    check_alpha_dim(x.size(), basis.dim, "omega");
    std::vector<double> v(n);
    for (int r = 0; r < n; ++r) {
        double acc = basis.b[r];
        const double* row = basis.a.data() + static_cast<std::size_t>(r) * n;
        for (int c = 0; c < n; ++c) acc += row[c] * basis.phi[c] * x[c];
        v[r] = acc;
    }
    return kappa(v, basis.dim);
}

std::vector<double> omega_inv(const HermMat& m, const ChannelBasis& basis) {
    const int n = basis.channels();
    std::vector<double> alpha = kappa_inv(m);
    std::vector<double> x(n);
    for (int c = 0; c < n; ++c) {
        double acc = 0.0;
        for (int r = 0; r < n; ++r)
            acc += basis.a[static_cast<std::size_t>(r) * n + c] * (alpha[r] - basis.b[r]);
        x[c] = acc / basis.phi[c];
    }
    return x;
}

std::vector<double> omega_adjoint(const HermMat& m, const ChannelBasis& basis) {
    const int n = basis.channels();
    std::vector<double> alpha = kappa_inv(m); // kappa is unitary: adjoint == inverse
    std::vector<double> x(n);
    for (int c = 0; c < n; ++c) {
        double acc = 0.0;
        for (int r = 0; r < n; ++r)
            acc += basis.a[static_cast<std::size_t>(r) * n + c] * alpha[r];
        x[c] = acc * basis.phi[c];
    }
    return x;
}

double mad_sigma(const PlaneImage& img) {
    if (img.size() < 16) throw Error("mad_sigma: image must have at least 16 pixels");
    std::vector<double> w;
    if (img.width >= 2) {
        w.reserve(static_cast<std::size_t>(img.height) * (img.width - 1));
        for (int r = 0; r < img.height; ++r)
            for (int c = 0; c + 1 < img.width; ++c)
                w.push_back(std::abs(img.at(r, c + 1) - img.at(r, c)) / kSqrt2);
    } else {
        for (int r = 0; r + 1 < img.height; ++r)
            w.push_back(std::abs(img.at(r + 1, 0) - img.at(r, 0)) / kSqrt2);
    }
    if (w.empty()) throw Error("mad_sigma: no first differences available");
    std::size_t n = w.size();
    std::size_t mid = n / 2;
    std::nth_element(w.begin(), w.begin() + mid, w.end());
    double med = w[mid];
    if (n % 2 == 0) {
        double lo = *std::max_element(w.begin(), w.begin() + mid);
        med = 0.5 * (med + lo);
    }
    return kMadScale * med;
}

namespace {

ChannelImage stack_to_alpha(const HermStack& s, int width, int height) {
    const int d = s.dim();
    ChannelImage img(width, height, d * d);
    const std::size_t n = s.count();
    for (int i = 0; i < d; ++i) {
        const double* src = s.plane(i);
        std::copy(src, src + n, img.plane(i));
    }
    int p = d;
    for (int off = 1; off < d; ++off)
        for (int i = 0; i + off < d; ++i) {
            int rp = s.re_plane(i, i + off);
            const double* re = s.plane(rp);
            const double* im = s.plane(rp + 1);
            double* dst_re = img.plane(p);
            double* dst_im = img.plane(p + 1);
            for (std::size_t k = 0; k < n; ++k) {
                dst_re[k] = re[k] * kSqrt2;
                dst_im[k] = im[k] * kSqrt2;
            }
            p += 2;
        }
    return img;
}

HermStack alpha_to_stack(const ChannelImage& img, int d) {
    HermStack s(img.pixels(), d);
    const std::size_t n = s.count();
    for (int i = 0; i < d; ++i) {
        const double* src = img.plane(i);
        std::copy(src, src + n, s.plane(i));
    }
    int p = d;
    for (int off = 1; off < d; ++off)
        for (int i = 0; i + off < d; ++i) {
            int rp = s.re_plane(i, i + off);
            double* re = s.plane(rp);
            double* im = s.plane(rp + 1);
            const double* src_re = img.plane(p);
            const double* src_im = img.plane(p + 1);
            for (std::size_t k = 0; k < n; ++k) {
                re[k] = src_re[k] / kSqrt2;
                im[k] = src_im[k] / kSqrt2;
            }
            p += 2;
        }
    return s;
}

} // namespace

ChannelBasis calibrate(const CovImage& c, double looks) {
    (void)looks;
    const int d = c.dim();
    const int nch = d * d;
    const std::size_t n = c.pixels();
    if (n < static_cast<std::size_t>(nch) + 1 || n < 16)
        throw Error("calibrate: need at least max(d^2 + 1, 16) pixels");

    HermStack logs = mat_log(c.stack);
    ChannelImage alpha = stack_to_alpha(logs, c.width, c.height);

    ChannelBasis basis;
    basis.dim = d;
    basis.b.resize(nch);
    for (int ch = 0; ch < nch; ++ch)
        basis.b[ch] = block_sum(alpha.plane(ch), n) / static_cast<double>(n);

    // Channel covariance, deterministic fixed-tree sums.
    std::vector<double> cov(static_cast<std::size_t>(nch) * nch);
    for (int i = 0; i < nch; ++i) {
        const double* pi = alpha.plane(i);
        for (int j = i; j < nch; ++j) {
            const double* pj = alpha.plane(j);
            double bi = basis.b[i], bj = basis.b[j];
            double s = block_sum(n, [&](std::size_t k) { return (pi[k] - bi) * (pj[k] - bj); });
            cov[static_cast<std::size_t>(i) * nch + j] = s / static_cast<double>(n);
            cov[static_cast<std::size_t>(j) * nch + i] = cov[static_cast<std::size_t>(i) * nch + j];
        }
    }

    HermMat covm(nch);
    for (int i = 0; i < nch; ++i) {
        covm.diag(i) = cov[static_cast<std::size_t>(i) * nch + i];
        for (int j = i + 1; j < nch; ++j)
            covm.upper(i, j) = cov[static_cast<std::size_t>(i) * nch + j];
    }
    EigH eg = eig_hermitian(covm);
    double lmax = eg.values.back();
    if (!(lmax > 0.0) || eg.values.front() <= 1e-12 * lmax)
        throw DegenerateCalibrationError("calibrate: channel covariance is rank deficient (constant input?)");

    // PCA axes, descending variance. eig_hermitian already fixes each vector's
    // largest-magnitude entry positive; entries are real here.
    basis.a.assign(static_cast<std::size_t>(nch) * nch, 0.0);
    for (int col = 0; col < nch; ++col) {
        int src = nch - 1 - col;
        for (int row = 0; row < nch; ++row)
            basis.a[static_cast<std::size_t>(row) * nch + col] =
                eg.vectors[static_cast<std::size_t>(src) * nch + row].real();
    }

    // Rotated channels and their MAD scales.
    basis.phi.assign(nch, 0.0);
    ChannelImage rotated(c.width, c.height, nch);
    parallel_for(n, [&](std::size_t kb, std::size_t ke) {
        for (std::size_t k = kb; k < ke; ++k)
            for (int col = 0; col < nch; ++col) {
                double acc = 0.0;
                for (int row = 0; row < nch; ++row)
                    acc += basis.a[static_cast<std::size_t>(row) * nch + col] *
                           (alpha.plane(row)[k] - basis.b[row]);
                rotated.plane(col)[k] = acc;
            }
    });
    for (int ch = 0; ch < nch; ++ch) {
        basis.phi[ch] = mad_sigma(rotated.extract(ch));
        if (!(basis.phi[ch] > 0.0))
            throw DegenerateCalibrationError("calibrate: channel " + std::to_string(ch) +
                                             " has zero MAD scale");
    }
    return basis;
}

ChannelImage omega_inv_image(const HermStack& log_stack, int width, int height,
                             const ChannelBasis& basis) {
    const int nch = basis.channels();
    ChannelImage alpha = stack_to_alpha(log_stack, width, height);
    ChannelImage y(width, height, nch);
    const std::size_t n = log_stack.count();
    parallel_for(n, [&](std::size_t kb, std::size_t ke) {
        for (std::size_t k = kb; k < ke; ++k)
            for (int col = 0; col < nch; ++col) {
                double acc = 0.0;
                for (int row = 0; row < nch; ++row)
                    acc += basis.a[static_cast<std::size_t>(row) * nch + col] *
                           (alpha.plane(row)[k] - basis.b[row]);
                y.plane(col)[k] = acc / basis.phi[col];
            }
    });
    return y;
}

HermStack omega_image(const ChannelImage& x, const ChannelBasis& basis) {
    const int nch = basis.channels();
    if (x.channels != nch) throw Error("omega_image: channel count mismatch");
    ChannelImage alpha(x.width, x.height, nch);
    const std::size_t n = x.pixels();
    parallel_for(n, [&](std::size_t kb, std::size_t ke) {
        for (std::size_t k = kb; k < ke; ++k)
            for (int row = 0; row < nch; ++row) {
                double acc = basis.b[row];
                for (int col = 0; col < nch; ++col)
                    acc += basis.a[static_cast<std::size_t>(row) * nch + col] * basis.phi[col] *
                           x.plane(col)[k];
                alpha.plane(row)[k] = acc;
            }
    });
    return alpha_to_stack(alpha, basis.dim);
}

CovImage condition_input(const CovImage& c, double looks) {
    const int d = c.dim();
    const std::size_t n = c.pixels();

    for (int i = 0; i < d; ++i) {
        const double* diag = c.stack.plane(i);
        for (std::size_t k = 0; k < n; ++k) {
            if (!std::isfinite(diag[k]))
                throw InvalidDataError("condition_input: non-finite diagonal (pixel " +
                                           std::to_string(k) + ")",
                                       static_cast<long>(k));
            if (!(diag[k] > 0.0))
                throw InvalidDataError("condition_input: nonpositive diagonal entry (pixel " +
                                           std::to_string(k) + ")",
                                       static_cast<long>(k));
        }
    }

    CovImage out = c;
    bool modified = false;

    if (looks < d && d > 1) {
        // Shrink off-diagonals by the coherence of a locally averaged
        // covariance; the averaged matrix is positive semidefinite, so each
        // shrink factor is <= 1 and generically < 1.
        modified = true;
        const std::vector<double> taps = gaussian_taps(1.0);
        std::vector<PlaneImage> smooth(static_cast<std::size_t>(d) * d);
        auto plane_of = [&](int p) {
            PlaneImage img(c.width, c.height);
            const double* src = c.stack.plane(p);
            std::copy(src, src + n, img.data.begin());
            return img;
        };
        for (int p = 0; p < d * d; ++p)
            smooth[p] = convolve_separable(plane_of(p), taps, Boundary::Reflective);

        for (int off = 1; off < d; ++off)
            for (int i = 0; i + off < d; ++i) {
                int j = i + off;
                int rp = c.stack.re_plane(i, j);
                double* re = out.stack.plane(rp);
                double* im = out.stack.plane(rp + 1);
                const PlaneImage& sre = smooth[rp];
                const PlaneImage& sim = smooth[rp + 1];
                const PlaneImage& sii = smooth[i];
                const PlaneImage& sjj = smooth[j];
                for (std::size_t k = 0; k < n; ++k) {
                    double denom = std::sqrt(sii.data[k] * sjj.data[k]);
                    double coh = denom > 0.0
                                     ? std::hypot(sre.data[k], sim.data[k]) / denom
                                     : 0.0;
                    if (coh > 1.0) coh = 1.0;
                    re[k] *= coh;
                    im[k] *= coh;
                }
            }
    }

    // Positive-definiteness guard.
    std::vector<unsigned char> loaded(n, 0);
    parallel_for(n, [&](std::size_t kb, std::size_t ke) {
        for (std::size_t k = kb; k < ke; ++k) {
            HermMat m = out.stack.get(k);
            double floor = pd_floor(m.trace(), d);
            if (min_eigenvalue(m) > floor) continue;
            loaded[k] = 1;
            double delta = 1e-6;
            for (int attempt = 0; attempt < 60; ++attempt) {
                double load = delta * (m.trace() / d);
                for (int i = 0; i < d; ++i) m.diag(i) += load;
                if (min_eigenvalue(m) > pd_floor(m.trace(), d)) break;
                delta *= 2.0;
            }
            out.stack.set(k, m);
        }
    });
    bool any_loaded = std::any_of(loaded.begin(), loaded.end(), [](unsigned char v) { return v != 0; });

    if (!modified && !any_loaded) return c; // bit-exact passthrough
    return out;
}

} // namespace mulog
