#pragma once

#include <string>
#include <vector>

#include "mulog/image.hpp"

namespace mulog {

// Summary of a reconstruction against a reference plane.  psnr_db is +inf when
// the planes are bit-identical; peak_value records the 99th-percentile peak the
// PSNR and SSIM dynamic range were anchored to; residual_mad is the scaled
// median absolute deviation (robust std) of est - ref.
struct QualityReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    double peak_value = 0.0;
    double residual_mad = 0.0;
};

// Empirical quantile with linear interpolation between order statistics
// (the "type 7" convention: h = q*(n-1)).  q must lie in [0, 1].
double quantile(std::vector<double> values, double q);

// 10*log10(peak^2 / MSE) with peak = 99th percentile of ref.
// Identical inputs return +inf.
double psnr_q99(const PlaneImage& est, const PlaneImage& ref);

// Mean local SSIM over the valid region (windows fully inside the image).
// 11x11 Gaussian window with std 1.5, K1 = 0.01, K2 = 0.03, dynamic range
// anchored to the 99th percentile of ref.  Both images must be at least 11x11.
double ssim(const PlaneImage& est, const PlaneImage& ref);

QualityReport compare_planes(const PlaneImage& est, const PlaneImage& ref);

// Plane the metrics operate on: amplitude sqrt(I) for single-channel images,
// total intensity tr(C) for multichannel ones.
PlaneImage metric_plane(const CovImage& img);

QualityReport compare_images(const CovImage& est, const CovImage& ref);

// One machine-readable record (a single JSON line, no trailing newline).
// Infinite PSNR is emitted as the string "inf".
std::string report_json(const QualityReport& r);

// Small human-readable table.
std::string report_table(const QualityReport& r);

} // namespace mulog
