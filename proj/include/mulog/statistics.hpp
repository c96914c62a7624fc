#pragma once

#include <cstdint>
#include <vector>

#include "mulog/channelizer.hpp"
#include "mulog/image.hpp"

namespace mulog {

// Speckle acquisition model: d-channel covariance data with L looks.
// L must be a positive integer >= 1 when d > 1 (Wishart sampling); any real
// L > 0 is accepted when d == 1 (gamma intensity model).
struct SpeckleModel {
    double looks = 1.0;
    int dim = 1;
    void validate() const;
};

// Digamma / polygamma with absolute accuracy ~1e-12 for x > 0: upward
// recurrence onto x >= 10 followed by the Bernoulli asymptotic expansion.
double digamma(double x);
double polygamma(int m, double x); // m >= 1

// Log-intensity noise statistics: E[log I - log R] = psi(L) - log L (bias),
// Var[log I] = psi'(L). Variance is > 0 for all L > 0.
struct FTStats {
    double bias;
    double variance;
};
FTStats ft_stats(double looks);

// Mean and variance of log det C for C ~ Wishart(Sigma, L)/L in dimension d:
//   mean = tr(log Sigma) + sum_{i=1..d} psi(L - i + 1) - d log L
//   var  = sum_{i=1..d} psi'(L - i + 1)
// Requires L >= d.
struct LogDetStats {
    double mean;
    double variance;
};
LogDetStats logdet_trace_stats(double trace_log_sigma, double looks, int dim);

// Multiplicative gamma speckle: I = R * S with S ~ Gamma(shape L, scale 1/L),
// E[S] = 1. One Philox stream per pixel (stream id = pixel index) keeps the
// field reproducible for any schedule.
PlaneImage sample_gamma_speckle(const PlaneImage& reflectivity, double looks,
                                std::uint64_t seed);

// Scaled complex Wishart: C = (1/L) sum_{t=1..L} (S^{1/2} g_t)(S^{1/2} g_t)^H
// with g_t circular standard normal, so E[C] = Sigma and
// Var[C_ij] = Sigma_ii Sigma_jj / L. Wishart factorization: a draw with
// covariance Sigma equals Sigma^{1/2} W Sigma^{1/2} where W is the white
// (Sigma = I) draw from the same stream. Integer L >= 1.
HermMat sample_wishart(const HermMat& sigma, int looks, std::uint64_t seed,
                       std::uint64_t stream);

// Whole-image Wishart sampling, one stream per pixel.
CovImage sample_wishart_image(const CovImage& sigma, int looks, std::uint64_t seed);

// Data term of the log-domain estimation problem for channel images x against
// observed channels y (both through the given basis):
//   L * sum_k tr( Omega(x_k) + exp(Omega(y_k)) exp(-Omega(x_k)) )
double neg_log_likelihood(const ChannelImage& x, const ChannelImage& y, double looks,
                          const ChannelBasis& basis);

// Density of the scaled complex Wishart distribution (integer L >= d):
//   p(C; Sigma, L) = L^{Ld} |C|^{L-d} exp(-L tr(Sigma^{-1} C))
//                    / (Gamma_d(L) |Sigma|^L)
// where Gamma_d is the complex multivariate gamma function. Returns the
// density value; log_wishart_density returns its log, which stays finite
// where the density underflows.
double wishart_density(const HermMat& c, const HermMat& sigma, int looks);
double log_wishart_density(const HermMat& c, const HermMat& sigma, int looks);

} // namespace mulog
