#pragma once

#include <string>
#include <vector>

#include "mulog/image.hpp"

namespace mulog {

// A noise-free synthetic scene: the per-pixel covariance truth (looks = 0
// marks it as a reference rather than an observation) and an integer region
// map for region-wise statistics.
struct Scene {
    CovImage truth;
    PlaneImage region_id;
};

// Names accepted by make_scene: "constant", "mosaic", "gradient", "points".
std::vector<std::string> builtin_scene_names();

// Deterministic scene construction for any dim >= 1.
//   constant  one region, mid reflectivity, moderate coherence
//   mosaic    4x4 tile grid cycling reflectivity, coherence and phase;
//             reflectivity carries a smooth within-tile texture and a 2x2
//             bright scatterer sits at each tile center
//   gradient  log-linear reflectivity ramp (and a coherence ramp when dim > 1)
//   points    dark background with a sparse grid of bright 2x2 targets
Scene make_scene(const std::string& name, int width, int height, int dim);

// Covariance with per-channel powers power[i], exponential coherence profile
// |rho|^(j-i) and linear phase ramp phase*(j-i) on the off-diagonals.
// Positive definite for any positive powers and |rho| < 1.
HermMat covariance_model(const std::vector<double>& power, double rho, double phase);

} // namespace mulog
