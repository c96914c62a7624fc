#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "mulog/errors.hpp"

namespace mulog {

using cplx = std::complex<double>;

// Hermitian matrix of runtime dimension d. Only the real diagonal and the
// strict upper triangle are stored, so M == M^H holds by construction.
class HermMat {
public:
    HermMat() = default;
    explicit HermMat(int d) : d_(d), diag_(d, 0.0), upper_(d > 1 ? d * (d - 1) / 2 : 0) {}

    static HermMat identity(int d) {
        HermMat m(d);
        for (int i = 0; i < d; ++i) m.diag_[i] = 1.0;
        return m;
    }

    int dim() const noexcept { return d_; }

    double& diag(int i) { return diag_[i]; }
    double diag(int i) const { return diag_[i]; }

    // Strict upper entry (i, j), i < j.
    cplx& upper(int i, int j) { return upper_[uidx(i, j)]; }
    cplx upper(int i, int j) const { return upper_[uidx(i, j)]; }

    // Full-matrix read access honoring Hermitian symmetry.
    cplx at(int i, int j) const {
        if (i == j) return cplx(diag_[i], 0.0);
        if (i < j) return upper_[uidx(i, j)];
        return std::conj(upper_[uidx(j, i)]);
    }

    double trace() const {
        double t = 0.0;
        for (double v : diag_) t += v;
        return t;
    }

    double frobenius_norm() const;
    bool finite() const;

    HermMat& operator+=(const HermMat& o);
    HermMat& operator-=(const HermMat& o);
    friend HermMat operator-(HermMat a, const HermMat& b) { return a -= b; }
    friend HermMat operator+(HermMat a, const HermMat& b) { return a += b; }

private:
    std::size_t uidx(int i, int j) const {
        // Upper triangle packed by superdiagonals: offset 1 first, then 2, ...
        // Matches the channel layout used throughout the library.
        int k = j - i;
        std::size_t base = 0;
        for (int s = 1; s < k; ++s) base += static_cast<std::size_t>(d_ - s);
        return base + static_cast<std::size_t>(i);
    }

    int d_ = 0;
    std::vector<double> diag_;
    std::vector<cplx> upper_;
};

// Stack of n Hermitian matrices in structure-of-arrays form: one contiguous
// plane per matrix entry. Plane order: the d diagonals, then for each
// superdiagonal offset k = 1..d-1 the entries (i, i+k) as (re, im) plane
// pairs. This is also the on-disk payload order.
class HermStack {
public:
    HermStack() = default;
    HermStack(std::size_t count, int dim);

    std::size_t count() const noexcept { return n_; }
    int dim() const noexcept { return d_; }
    int plane_count() const noexcept { return d_ * d_; }

    double* plane(int p) { return planes_.data() + static_cast<std::size_t>(p) * n_; }
    const double* plane(int p) const { return planes_.data() + static_cast<std::size_t>(p) * n_; }

    // Plane indices for entry (i, j), i < j.
    int re_plane(int i, int j) const;
    int im_plane(int i, int j) const { return re_plane(i, j) + 1; }

    HermMat get(std::size_t k) const;
    void set(std::size_t k, const HermMat& m);

    bool same_shape(const HermStack& o) const { return n_ == o.n_ && d_ == o.d_; }

    const std::vector<double>& raw() const noexcept { return planes_; }
    std::vector<double>& raw() noexcept { return planes_; }

private:
    std::size_t n_ = 0;
    int d_ = 0;
    std::vector<double> planes_; // d^2 planes of n doubles each
};

struct EigH {
    std::vector<double> values;   // ascending
    std::vector<cplx> vectors;    // column-major d x d, column j pairs values[j]
};

// Cyclic Jacobi eigendecomposition for Hermitian matrices. Sweeps until the
// off-diagonal Frobenius mass is <= 1e-14 * ||M||_F (30 sweeps max).
// Eigenvalues ascend; each eigenvector's largest-magnitude entry is made real
// positive so the factorization is unique up to degeneracies.
EigH eig_hermitian(const HermMat& m);

// Matrix log / exp through the eigendecomposition. mat_log demands all
// eigenvalues above the positive-definiteness floor
//   1e-12 * max(trace/d, 1)
// and reports the offending pixel when called through the stack overloads.
// mat_exp refuses eigenvalues above 709 (exp would overflow double).
HermMat mat_log(const HermMat& m);
HermMat mat_exp(const HermMat& m);

HermStack mat_log(const HermStack& s);
HermStack mat_exp(const HermStack& s);

inline constexpr double kExpOverflowLimit = 709.0;

double pd_floor(double trace, int d);

// Smallest eigenvalue, used for positive-definiteness checks.
double min_eigenvalue(const HermMat& m);

// Closed-form 2x2 log/exp evaluated plane-wise over a whole stack; the fast
// path behind the d == 2 despeckling pipeline. Results match the general
// eigendecomposition route to ~1e-14.
void mat_log_2x2(const double* a, const double* b, const double* cre, const double* cim,
                 double* la, double* lb, double* lcre, double* lcim, std::size_t n);
void mat_exp_2x2(const double* a, const double* b, const double* cre, const double* cim,
                 double* ea, double* eb, double* ecre, double* ecim, std::size_t n);

// Frechet-type derivative of the exponential along dh, approximated by the
// q-point midpoint rule
//   (1/q) * sum_t exp(u_t h) dh exp((1-u_t) h),  u_t = (t - 1/2)/q.
// Exact (any q >= 1) when h and dh commute.
HermMat exp_directional_derivative(const HermMat& h, const HermMat& dh, int q);

} // namespace mulog
