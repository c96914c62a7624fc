#include "mulog/statistics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mulog/parallel.hpp"
#include "mulog/rng.hpp"

namespace mulog {

void SpeckleModel::validate() const {
    if (dim < 1) throw Error("SpeckleModel: dim must be >= 1");
    if (!(looks > 0.0)) throw Error("SpeckleModel: looks must be > 0");
    if (dim > 1 && (looks != std::floor(looks) || looks < 1.0))
        throw Error("SpeckleModel: looks must be a positive integer when dim > 1");
}

namespace {

// B_{2k}/(2k) terms of the digamma asymptotic series.
constexpr double kDigammaAsy[] = {
    1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0,
    1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0,
};

// Bernoulli numbers B_2..B_14 for the polygamma expansion.
constexpr double kBernoulli[] = {
    1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0,
    5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0,
};

constexpr double kAsyCutoff = 10.0;

} // namespace

double digamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("digamma: x must be > 0");
    double acc = 0.0;
    while (x < kAsyCutoff) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    double inv2 = 1.0 / (x * x);
    double series = 0.0;
    double p = inv2;
    for (double c : kDigammaAsy) {
        series += c * p;
        p *= inv2;
    }
    return acc + std::log(x) - 0.5 / x - series;
}

double polygamma(int m, double x) {
    if (m < 1) throw std::domain_error("polygamma: order must be >= 1");
    if (!(x > 0.0)) throw std::domain_error("polygamma: x must be > 0");

    // psi^{(m)}(x) = psi^{(m)}(x+1) + (-1)^{m+1} m! / x^{m+1}
    double fact_m = 1.0;
    for (int i = 2; i <= m; ++i) fact_m *= i;
    double sign_rec = (m % 2 == 1) ? 1.0 : -1.0; // (-1)^{m+1}
    double acc = 0.0;
    while (x < kAsyCutoff) {
        acc += sign_rec * fact_m / std::pow(x, m + 1);
        x += 1.0;
    }

    // Asymptotic expansion:
    // psi^{(m)}(x) ~ (-1)^{m-1} [ (m-1)!/x^m + m!/(2 x^{m+1})
    //                + sum_k B_{2k} (2k+m-1)! / (2k)! / x^{2k+m} ]
    double lead = (fact_m / m) / std::pow(x, m) + fact_m / (2.0 * std::pow(x, m + 1));
    double series = 0.0;
    for (int k = 1; k <= 7; ++k) {
        // (2k+m-1)! / (2k)!  =  (2k+1)(2k+2)...(2k+m-1)
        double ratio = 1.0;
        for (int j = 2 * k + 1; j <= 2 * k + m - 1; ++j) ratio *= j;
        series += kBernoulli[k - 1] * ratio / std::pow(x, 2 * k + m);
    }
    double sign = (m % 2 == 1) ? 1.0 : -1.0; // (-1)^{m-1}
    return acc + sign * (lead + series);
}

FTStats ft_stats(double looks) {
    if (!(looks > 0.0)) throw std::domain_error("ft_stats: looks must be > 0");
    return {digamma(looks) - std::log(looks), polygamma(1, looks)};
}

LogDetStats logdet_trace_stats(double trace_log_sigma, double looks, int dim) {
    if (dim < 1) throw std::domain_error("logdet_trace_stats: dim must be >= 1");
    if (!(looks >= dim))
        throw std::domain_error("logdet_trace_stats: looks must be >= dim");
    double mean = trace_log_sigma - dim * std::log(looks);
    double var = 0.0;
    for (int i = 1; i <= dim; ++i) {
        mean += digamma(looks - i + 1);
        var += polygamma(1, looks - i + 1);
    }
    return {mean, var};
}

PlaneImage sample_gamma_speckle(const PlaneImage& reflectivity, double looks,
                                std::uint64_t seed) {
    if (!(looks > 0.0)) throw Error("sample_gamma_speckle: looks must be > 0");
    const std::size_t n = reflectivity.size();
    for (std::size_t k = 0; k < n; ++k)
        if (!(reflectivity.data[k] > 0.0))
            throw InvalidDataError("sample_gamma_speckle: nonpositive reflectivity (pixel " +
                                   std::to_string(k) + ")");
    PlaneImage out(reflectivity.width, reflectivity.height);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            Philox rng(seed, k);
            out.data[k] = reflectivity.data[k] * rng.gamma(looks) / looks;
        }
    });
    return out;
}

namespace {

// Dense d x d complex matrix-vector helpers for the Wishart sampler.
struct SqrtFactor {
    int d;
    std::vector<cplx> m; // column-major Sigma^{1/2}
};

SqrtFactor matrix_sqrt(const HermMat& sigma) {
    const int d = sigma.dim();
    EigH eg = eig_hermitian(sigma);
    for (double v : eg.values)
        if (!(v >= 0.0))
            throw NotPositiveDefiniteError("sample_wishart: sigma has negative eigenvalue " +
                                           std::to_string(v));
    SqrtFactor f{d, std::vector<cplx>(static_cast<std::size_t>(d) * d)};
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) {
            cplx acc(0.0);
            for (int k = 0; k < d; ++k)
                acc += eg.vectors[static_cast<std::size_t>(k) * d + i] * std::sqrt(eg.values[k]) *
                       std::conj(eg.vectors[static_cast<std::size_t>(k) * d + j]);
            f.m[static_cast<std::size_t>(j) * d + i] = acc;
        }
    return f;
}

HermMat wishart_draw(const SqrtFactor& root, int looks, Philox& rng) {
    const int d = root.d;
    const double inv_sqrt2 = 0.70710678118654752440;
    std::vector<cplx> g(d), v(d);
    HermMat c(d);
    std::vector<cplx> accum(static_cast<std::size_t>(d) * d, cplx(0.0)); // upper incl. diag
    for (int t = 0; t < looks; ++t) {
        for (int i = 0; i < d; ++i) {
            double re = rng.normal();
            double im = rng.normal();
            g[i] = cplx(re * inv_sqrt2, im * inv_sqrt2); // E|g_i|^2 = 1
        }
        for (int i = 0; i < d; ++i) {
            cplx acc(0.0);
            for (int k = 0; k < d; ++k) acc += root.m[static_cast<std::size_t>(k) * d + i] * g[k];
            v[i] = acc;
        }
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j)
                accum[static_cast<std::size_t>(i) * d + j] += v[i] * std::conj(v[j]);
    }
    for (int i = 0; i < d; ++i) {
        c.diag(i) = accum[static_cast<std::size_t>(i) * d + i].real() / looks;
        for (int j = i + 1; j < d; ++j)
            c.upper(i, j) = accum[static_cast<std::size_t>(i) * d + j] / static_cast<double>(looks);
    }
    return c;
}

} // namespace

HermMat sample_wishart(const HermMat& sigma, int looks, std::uint64_t seed,
                       std::uint64_t stream) {
    if (looks < 1) throw Error("sample_wishart: looks must be a positive integer");
    SqrtFactor root = matrix_sqrt(sigma);
    Philox rng(seed, stream);
    return wishart_draw(root, looks, rng);
}

CovImage sample_wishart_image(const CovImage& sigma, int looks, std::uint64_t seed) {
    if (looks < 1) throw Error("sample_wishart_image: looks must be a positive integer");
    CovImage out(sigma.width, sigma.height, sigma.dim(), static_cast<double>(looks));
    const std::size_t n = sigma.pixels();
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            SqrtFactor root = matrix_sqrt(sigma.stack.get(k));
            Philox rng(seed, k);
            out.stack.set(k, wishart_draw(root, looks, rng));
        }
    });
    return out;
}

double neg_log_likelihood(const ChannelImage& x, const ChannelImage& y, double looks,
                          const ChannelBasis& basis) {
    if (x.width != y.width || x.height != y.height || x.channels != y.channels)
        throw Error("neg_log_likelihood: shape mismatch");
    const int d = basis.dim;
    const std::size_t n = x.pixels();
    const int nch = basis.channels();

    double total = block_sum(n, [&](std::size_t k) {
        std::vector<double> xv(nch), yv(nch);
        for (int c = 0; c < nch; ++c) {
            xv[c] = x.plane(c)[k];
            yv[c] = y.plane(c)[k];
        }
        HermMat hx = omega(xv, basis);
        HermMat hy = omega(yv, basis);
        EigH eg = eig_hermitian(hx);
        HermMat ey = mat_exp(hy);
        // tr(exp(hy) exp(-hx)) = sum_i e^{-li} (E^H exp(hy) E)_{ii}
        double tr = hx.trace();
        for (int i = 0; i < d; ++i) {
            cplx gii(0.0);
            for (int r = 0; r < d; ++r)
                for (int s = 0; s < d; ++s)
                    gii += std::conj(eg.vectors[static_cast<std::size_t>(i) * d + r]) * ey.at(r, s) *
                           eg.vectors[static_cast<std::size_t>(i) * d + s];
            tr += std::exp(-eg.values[i]) * gii.real();
        }
        return tr;
    });
    return looks * total;
}

double log_wishart_density(const HermMat& c, const HermMat& sigma, int looks) {
    const int d = c.dim();
    if (sigma.dim() != d) throw Error("wishart_density: dimension mismatch");
    if (looks < d) throw std::domain_error("wishart_density: looks must be >= dim");

    EigH es = eig_hermitian(sigma);
    double logdet_sigma = 0.0;
    for (double v : es.values) {
        if (!(v > 0.0)) throw NotPositiveDefiniteError("wishart_density: sigma not positive definite");
        logdet_sigma += std::log(v);
    }
    EigH ec = eig_hermitian(c);
    double logdet_c = 0.0;
    for (double v : ec.values) {
        if (!(v > 0.0))
            throw NotPositiveDefiniteError("wishart_density: sample not positive definite");
        logdet_c += std::log(v);
    }
    // tr(Sigma^{-1} C) through Sigma's eigenbasis.
    double tr = 0.0;
    for (int i = 0; i < d; ++i) {
        cplx gii(0.0);
        for (int r = 0; r < d; ++r)
            for (int s = 0; s < d; ++s)
                gii += std::conj(es.vectors[static_cast<std::size_t>(i) * d + r]) * c.at(r, s) *
                       es.vectors[static_cast<std::size_t>(i) * d + s];
        tr += gii.real() / es.values[i];
    }

    // log Gamma_d(L) = d(d-1)/2 log pi + sum_i log Gamma(L - i + 1)
    double log_mvgamma = 0.5 * d * (d - 1) * std::log(3.14159265358979323846);
    for (int i = 1; i <= d; ++i) log_mvgamma += std::lgamma(static_cast<double>(looks - i + 1));

    return looks * d * std::log(static_cast<double>(looks)) + (looks - d) * logdet_c -
           log_mvgamma - looks * logdet_sigma - looks * tr;
}

double wishart_density(const HermMat& c, const HermMat& sigma, int looks) {
    return std::exp(log_wishart_density(c, sigma, looks));
}

} // namespace mulog
