#include "mulog/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "mulog/errors.hpp"
#include "mulog/parallel.hpp"

namespace mulog {

namespace {

void require_same_shape(const PlaneImage& est, const PlaneImage& ref, const char* where) {
    if (est.width != ref.width || est.height != ref.height)
        throw InvalidDataError(std::string(where) + ": shape mismatch");
}

// 11x11 Gaussian window, std 1.5, normalized to unit sum.
std::vector<double> ssim_window() {
    std::vector<double> w(11 * 11);
    double sum = 0.0;
    for (int r = 0; r < 11; ++r)
        for (int c = 0; c < 11; ++c) {
            double dr = r - 5.0, dc = c - 5.0;
            w[r * 11 + c] = std::exp(-(dr * dr + dc * dc) / (2.0 * 1.5 * 1.5));
            sum += w[r * 11 + c];
        }
    for (double& v : w) v /= sum;
    return w;
}

} // namespace

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidDataError("quantile: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidDataError("quantile: q outside [0, 1]");
    std::sort(values.begin(), values.end());
    double h = q * static_cast<double>(values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(h);
    double frac = h - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double psnr_q99(const PlaneImage& est, const PlaneImage& ref) {
    require_same_shape(est, ref, "psnr_q99");
    const std::size_t n = ref.data.size();
    double peak = quantile(ref.data, 0.99);
    double mse = block_sum(n, [&](std::size_t k) {
                     double d = est.data[k] - ref.data[k];
                     return d * d;
                 }) /
                 static_cast<double>(n);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const PlaneImage& est, const PlaneImage& ref) {
    require_same_shape(est, ref, "ssim");
    if (est.width < 11 || est.height < 11)
        throw InvalidDataError("ssim: image smaller than the 11x11 window");
    double peak = quantile(ref.data, 0.99);
    if (!(peak > 0.0)) throw InvalidDataError("ssim: reference dynamic range is not positive");
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    static const std::vector<double> window = ssim_window();

    const int vw = est.width - 10, vh = est.height - 10;
    const std::size_t nv = static_cast<std::size_t>(vw) * vh;
    std::vector<double> map(nv);
    parallel_for(nv, [&](std::size_t kb, std::size_t ke) {
        for (std::size_t k = kb; k < ke; ++k) {
            int r0 = static_cast<int>(k) / vw, c0 = static_cast<int>(k) % vw;
            double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
            for (int r = 0; r < 11; ++r)
                for (int c = 0; c < 11; ++c) {
                    double w = window[r * 11 + c];
                    double x = est.at(r0 + r, c0 + c);
                    double y = ref.at(r0 + r, c0 + c);
                    mx += w * x;
                    my += w * y;
                    xx += w * x * x;
                    yy += w * y * y;
                    xy += w * x * y;
                }
            double vx = xx - mx * mx, vy = yy - my * my, cov = xy - mx * my;
            map[k] = ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    });
    return block_sum(map.data(), nv) / static_cast<double>(nv);
}

QualityReport compare_planes(const PlaneImage& est, const PlaneImage& ref) {
    require_same_shape(est, ref, "compare_planes");
    QualityReport rep;
    rep.peak_value = quantile(ref.data, 0.99);
    rep.psnr_db = psnr_q99(est, ref);
    rep.ssim = ssim(est, ref);
    std::vector<double> res(ref.data.size());
    for (std::size_t k = 0; k < res.size(); ++k) res[k] = est.data[k] - ref.data[k];
    double med = quantile(res, 0.5);
    for (double& v : res) v = std::abs(v - med);
    rep.residual_mad = 1.4826 * quantile(std::move(res), 0.5);
    return rep;
}

PlaneImage metric_plane(const CovImage& img) {
    PlaneImage out(img.width, img.height);
    const std::size_t n = img.pixels();
    const int d = img.dim();
    if (d == 1) {
        const double* p = img.stack.plane(0);
        for (std::size_t k = 0; k < n; ++k) out.data[k] = std::sqrt(std::max(p[k], 0.0));
    } else {
        std::fill(out.data.begin(), out.data.end(), 0.0);
        for (int i = 0; i < d; ++i) {
            const double* p = img.stack.plane(i);
            for (std::size_t k = 0; k < n; ++k) out.data[k] += p[k];
        }
    }
    return out;
}

QualityReport compare_images(const CovImage& est, const CovImage& ref) {
    if (est.dim() != ref.dim())
        throw InvalidDataError("compare_images: channel dimension mismatch");
    return compare_planes(metric_plane(est), metric_plane(ref));
}

std::string report_json(const QualityReport& r) {
    nlohmann::ordered_json j;
    if (std::isinf(r.psnr_db))
        j["psnr_db"] = "inf";
    else
        j["psnr_db"] = r.psnr_db;
    j["ssim"] = r.ssim;
    j["peak_value"] = r.peak_value;
    j["residual_mad"] = r.residual_mad;
    return j.dump();
}

std::string report_table(const QualityReport& r) {
    char buf[256];
    if (std::isinf(r.psnr_db))
        std::snprintf(buf, sizeof(buf),
                      "  psnr_db       inf\n  ssim          %.4f\n  peak_value    %.6g\n"
                      "  residual_mad  %.6g\n",
                      r.ssim, r.peak_value, r.residual_mad);
    else
        std::snprintf(buf, sizeof(buf),
                      "  psnr_db       %.4f\n  ssim          %.4f\n  peak_value    %.6g\n"
                      "  residual_mad  %.6g\n",
                      r.psnr_db, r.ssim, r.peak_value, r.residual_mad);
    return buf;
}

} // namespace mulog
