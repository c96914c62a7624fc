#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mulog/convolve.hpp"
#include "mulog/image.hpp"

namespace mulog {

// A plugged-in Gaussian denoiser: plane in, plane out, noise std as the only
// knob. reentrant == false forces the plug-and-play loop to serialize calls
// (needed e.g. for interpreter-bound callables).
struct DenoiserHandle {
    std::string name;
    std::function<PlaneImage(const PlaneImage&, double)> fn;
    bool reentrant = true;

    PlaneImage operator()(const PlaneImage& img, double sigma) const;
};

struct TvConfig {
    double lambda_scale = 0.7; // prior weight; effective weight is lambda * sigma^2
    int max_iters = 200;
    double tol = 1e-5;         // stop when the dual step stalls below this
    Boundary boundary = Boundary::Reflective;
};

// Isotropic total-variation denoising, approximately solving
//   argmin_x 1/2 ||y - x||^2 + lambda * sigma^2 * TV(x)
// by fixed-point iteration on the dual field with step 1/8.
// sigma == 0 returns the input unchanged.
PlaneImage tv_denoise(const PlaneImage& img, double sigma, const TvConfig& cfg = {});

// Isotropic TV value with the same discretization the denoiser uses.
double total_variation(const PlaneImage& img, Boundary boundary = Boundary::Reflective);

// Gaussian smoothing baseline; spatial std = sigma clamped to [0.5, 3].
PlaneImage gaussian_smooth_denoise(const PlaneImage& img, double sigma,
                                   Boundary boundary = Boundary::Reflective);

DenoiserHandle tv_denoiser(const TvConfig& cfg = {});
DenoiserHandle gaussian_denoiser();
DenoiserHandle identity_denoiser();

// Wraps a shell command as a denoiser. The template must contain {input},
// {output} and {sigma}; the command is run per call with the plane in a dim-1
// container at {input}, sigma substituted in decimal, and must write the
// denoised plane container to {output}. Nonzero exit, timeout, or output of
// the wrong shape raise DenoiserContractError.
DenoiserHandle external_denoiser(const std::string& command_template,
                                 double timeout_seconds = 600.0);

// Parses a CLI denoiser spec: "tv", "gauss", "identity" or "ext:<template>".
DenoiserHandle make_denoiser(const std::string& spec, const TvConfig& tv_cfg = {});

// Empirical bounded-denoiser audit: runs the denoiser on a seeded unit-scale
// white-noise plane and reports max over sigma of ||f(x) - x||^2 / (n sigma^2).
struct BoundednessReport {
    std::string denoiser;
    std::vector<double> sigmas;
    std::vector<double> ratios; // per sigma
    double constant;            // max ratio
};
BoundednessReport audit_boundedness(const DenoiserHandle& d, int width = 96, int height = 96,
                                    std::uint64_t seed = 7);

} // namespace mulog
