#pragma once

#include <vector>

#include "mulog/image.hpp"

namespace mulog {

// Affine change of variables between real channel vectors x (length d^2) and
// Hermitian matrices: Omega(x) = kappa(A * (phi .* x) + b). A is orthogonal
// (decorrelation axes), phi holds per-channel noise scales, b the channel
// means. kappa is the fixed isometry defined below.
struct ChannelBasis {
    int dim = 0;                  // matrix dimension d; channel count is d^2
    std::vector<double> a;        // d^2 x d^2, row-major, orthogonal
    std::vector<double> b;        // length d^2
    std::vector<double> phi;      // length d^2, all > 0

    int channels() const noexcept { return dim * dim; }
    static ChannelBasis identity(int d);
};

// Isometry between R^{d^2} and Hermitian d x d matrices:
//   diagonal (i, i)      <- alpha[i]
//   off-diagonal (i, j)  <- (alpha[p] + j alpha[p+1]) / sqrt(2), i < j
// Off-diagonal pairs are enumerated by superdiagonal: offset 1 entries
// (1,2)..(d-1,d) first, then offset 2, ..., ending with (1,d). Under the real
// inner products on both sides kappa is unitary, so kappa_inv is both its
// inverse and its adjoint.
HermMat kappa(const std::vector<double>& alpha, int d);
std::vector<double> kappa_inv(const HermMat& m);

// Omega and friends. omega_adjoint is the adjoint of x -> kappa(A (phi .* x)),
// i.e. the linear part of Omega; it maps Hermitian matrices back to channels.
HermMat omega(const std::vector<double>& x, const ChannelBasis& basis);
std::vector<double> omega_inv(const HermMat& m, const ChannelBasis& basis);
std::vector<double> omega_adjoint(const HermMat& m, const ChannelBasis& basis);

// Robust noise-scale estimate: 1.4826 * median(|w|) where w are horizontal
// first differences divided by sqrt(2) (vertical when the image is a single
// column). Returns 0 for a constant image. Requires >= 16 pixels.
double mad_sigma(const PlaneImage& img);

// Fits the channel basis on log-transformed data C~ = mat_log(C):
// b = channel means, A = PCA axes of the channel covariance (descending
// eigenvalue order, sign fixed so each axis' largest component is positive),
// phi = per-channel MAD scale of the rotated channels. Throws
// DegenerateCalibrationError when the channel covariance is rank-deficient or
// a channel MAD vanishes (constant input). Requires >= d^2 + 1 pixels and
// >= 16 pixels.
ChannelBasis calibrate(const CovImage& c, double looks);

// Applies Omega^{-1} per pixel to a log-domain stack, producing the
// standardized channel image the plug-and-play loop operates on.
ChannelImage omega_inv_image(const HermStack& log_stack, int width, int height,
                             const ChannelBasis& basis);

// Per-pixel Omega applied to a channel image; inverse of omega_inv_image.
HermStack omega_image(const ChannelImage& x, const ChannelBasis& basis);

// Pre-log conditioning. Verifies positive diagonals (InvalidDataError with
// pixel index otherwise). When looks < d, off-diagonal entries are shrunk by
// the local coherence of a Gaussian-smoothed (sigma = 1 px, radius 3)
// neighborhood; any pixel still not positive definite receives diagonal
// loading 1e-6 * (trace/d) * I (repeated with doubling until definite). When
// looks >= d and every pixel is already positive definite the input is
// returned bit-identically.
CovImage condition_input(const CovImage& c, double looks);

} // namespace mulog
