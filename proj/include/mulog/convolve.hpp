#pragma once

#include <vector>

#include "mulog/image.hpp"

namespace mulog {

enum class Boundary {
    Reflective, // symmetric extension, edge sample duplicated
    Periodic    // wraparound; used by shift-equivariance tests
};

// Normalized 1-D Gaussian taps for the given std, truncated at
// radius = ceil(3 * sigma).
std::vector<double> gaussian_taps(double sigma);

// Separable convolution with the same odd-length kernel along rows then
// columns. The kernel is applied centered.
PlaneImage convolve_separable(const PlaneImage& img, const std::vector<double>& taps,
                              Boundary boundary);

} // namespace mulog
