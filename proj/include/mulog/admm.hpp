#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mulog/denoise.hpp"
#include "mulog/fidelity.hpp"
#include "mulog/image.hpp"

namespace mulog {

// One record per outer iteration, emitted through MulogOptions::diagnostics.
struct IterationRecord {
    int iter = 0;              // 1-based
    double beta = 0.0;
    double sigma = 0.0;        // denoiser noise std used this iteration
    double nll = 0.0;          // data term of the objective
    double objective = 0.0;    // nll + prior (prior 0 unless prior_eval is set)
    double primal_residual = 0.0; // ||z - x||_2
    std::vector<double> channel_mad; // MAD scale of x - y per channel
};

struct MulogOptions {
    int outer_iters = 6;
    int newton_iters = 10;
    int q = 1;
    std::optional<double> beta;       // default 1 + 2/L (mulog), (1 + 2/L)/psi'(L) (midal)
    double beta_growth = 1.0;         // beta multiplier applied after each iteration
    std::optional<double> init_sigma; // denoiser std for the init step; defaults:
                                      // 1 (standardized channels), sqrt(psi'(L)) for midal
    DenoiserHandle denoiser = tv_denoiser();
    std::function<void(const IterationRecord&)> diagnostics;  // optional
    std::function<double(const ChannelImage&)> prior_eval;    // optional, for objective
};

// Alternating scheme on standardized channels y (z-denoise, dual update,
// per-pixel matrix Newton solve with anchor z + d). Exposed so tests can run
// the loop with a hand-built basis.
ChannelImage plug_and_play_matrix(const ChannelImage& y, const ChannelBasis& basis,
                                  double looks, const MulogOptions& opts);

// Same loop with the scalar Newton solver on a single raw log channel.
PlaneImage plug_and_play_scalar(const PlaneImage& y, double looks, double beta_default,
                                const MulogOptions& opts);

struct MulogResult {
    CovImage sigma_hat;
    ChannelBasis basis;
};

// Full multichannel pipeline: condition, matrix log (closed form at d = 2),
// calibrate, standardize, plug-and-play, exponentiate back.
MulogResult mulog(const CovImage& c, double looks, const MulogOptions& opts);

// Single-channel baseline on y = log I without channel standardization;
// scalar Newton inner solver, beta default (1 + 2/L)/psi'(L).
PlaneImage midal(const PlaneImage& intensity, double looks, const MulogOptions& opts);

// Log-domain one-shot: denoise log I at the speckle std, add the log-moment
// debias log L - psi(L), exponentiate.
PlaneImage homomorphic(const PlaneImage& intensity, double looks,
                       const DenoiserHandle& denoiser);

// Prior evaluator matching the TV denoiser, for objective diagnostics.
std::function<double(const ChannelImage&)> tv_prior(double lambda,
                                                    Boundary boundary = Boundary::Reflective);

} // namespace mulog
