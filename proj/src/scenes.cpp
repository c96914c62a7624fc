#include "mulog/scenes.hpp"

#include <algorithm>
#include <cmath>

#include "mulog/errors.hpp"

namespace mulog {

namespace {

// Per-channel power ratios; channel i uses ratio[i % 8].
constexpr double kChannelRatio[8] = {1.0, 0.7, 1.3, 0.9, 1.1, 0.8, 1.2, 0.95};

// Per-region cycles for the mosaic tiles (4x4 grid, region = row * 4 + col).
constexpr double kMosaicReflect[16] = {1.0, 6.0, 0.35, 2.5, 9.0,  0.8, 4.0, 0.15,
                                       1.8, 0.5, 7.0,  1.2, 0.25, 3.2, 0.6, 5.0};
constexpr double kMosaicCoher[16] = {0.3,  0.9, 0.6,  0.1,  0.8,  0.45, 0.7,  0.2,
                                     0.95, 0.5, 0.05, 0.65, 0.85, 0.35, 0.75, 0.55};
constexpr double kMosaicPhase[16] = {0.0, 0.6,  -1.1, 1.9, 0.3,  -2.4, 1.2,  -0.5,
                                     2.8, -1.7, 0.9,  0.15, -2.0, 2.3, -0.8, 1.5};

// Reflectivity boost of the 2x2 scatterer embedded at each mosaic tile center.
constexpr double kScattererBoost = 10.0;

// Smooth within-tile reflectivity texture: log-amplitude and period (pixels)
// of a product-of-sines modulation. Coherence and phase are not modulated, so
// the polarimetric structure stays constant per tile.
constexpr double kMosaicTextureAmp = 0.8;
constexpr double kMosaicTexturePeriod = 12.0;

std::vector<double> channel_powers(double reflectivity, int dim) {
    std::vector<double> p(dim);
    for (int i = 0; i < dim; ++i) p[i] = reflectivity * kChannelRatio[i % 8];
    return p;
}

} // namespace

HermMat covariance_model(const std::vector<double>& power, double rho, double phase) {
    const int d = static_cast<int>(power.size());
    if (d < 1) throw InvalidDataError("covariance_model: empty power vector");
    for (double p : power)
        if (!(p > 0.0)) throw InvalidDataError("covariance_model: powers must be positive");
    if (!(std::abs(rho) < 1.0) && d > 1)
        throw InvalidDataError("covariance_model: |rho| must be < 1");
    HermMat m(d);
    for (int i = 0; i < d; ++i) m.diag(i) = power[i];
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            double mag = std::sqrt(power[i] * power[j]) * std::pow(std::abs(rho), j - i);
            double ang = phase * (j - i);
            m.upper(i, j) = cplx(mag * std::cos(ang), mag * std::sin(ang));
        }
    return m;
}

std::vector<std::string> builtin_scene_names() {
    return {"constant", "mosaic", "gradient", "points"};
}

Scene make_scene(const std::string& name, int width, int height, int dim) {
    if (width < 1 || height < 1 || dim < 1)
        throw InvalidDataError("make_scene: geometry must be positive");
    Scene s;
    s.truth = CovImage(width, height, dim, 0.0);
    s.region_id = PlaneImage(width, height, 0.0);

    auto fill_region = [&](auto classify) {
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) {
                std::size_t k = static_cast<std::size_t>(r) * width + c;
                auto [region, mat] = classify(r, c);
                s.region_id.data[k] = static_cast<double>(region);
                s.truth.stack.set(k, mat);
            }
    };

    if (name == "constant") {
        HermMat m = covariance_model(channel_powers(1.0, dim), 0.6, 0.5);
        fill_region([&](int, int) { return std::pair<int, HermMat>(0, m); });
    } else if (name == "mosaic") {
        HermMat tiles[16];
        for (int t = 0; t < 16; ++t)
            tiles[t] = covariance_model(channel_powers(kMosaicReflect[t], dim), kMosaicCoher[t],
                                        kMosaicPhase[t]);
        fill_region([&](int r, int c) {
            int tr = std::min(3, r * 4 / height);
            int tc = std::min(3, c * 4 / width);
            int t = tr * 4 + tc;
            // per-tile phase offset decorrelates the texture across regions
            double f = std::exp(kMosaicTextureAmp *
                                std::sin(2.0 * M_PI * c / kMosaicTexturePeriod + 0.5 * t) *
                                std::sin(2.0 * M_PI * r / kMosaicTexturePeriod));
            // one 2x2 bright scatterer at each tile center; under 0.1% of the
            // pixels, so quantile peaks and region statistics stay tile-driven
            int rr = (2 * tr + 1) * height / 8;
            int cc = (2 * tc + 1) * width / 8;
            if ((r == rr || r == rr + 1) && (c == cc || c == cc + 1)) f *= kScattererBoost;
            HermMat m = tiles[t];
            for (int i = 0; i < dim; ++i) m.diag(i) *= f;
            for (int i = 0; i < dim; ++i)
                for (int j = i + 1; j < dim; ++j) m.upper(i, j) *= f;
            return std::pair<int, HermMat>(t, m);
        });
    } else if (name == "gradient") {
        fill_region([&](int r, int c) {
            double u = width > 1 ? static_cast<double>(c) / (width - 1) : 0.0;
            double v = height > 1 ? static_cast<double>(r) / (height - 1) : 0.0;
            double reflect = std::exp(std::log(0.25) + u * (std::log(4.0) - std::log(0.25)));
            double rho = dim > 1 ? 0.1 + 0.8 * v : 0.0;
            return std::pair<int, HermMat>(
                0, covariance_model(channel_powers(reflect, dim), rho, 0.5));
        });
    } else if (name == "points") {
        HermMat background = covariance_model(channel_powers(1.0, dim), 0.5, 0.4);
        HermMat target = covariance_model(channel_powers(25.0, dim), 0.9, -0.7);
        fill_region([&](int r, int c) {
            // 2x2 bright targets on a 32-pixel grid offset by 16
            bool hit = (r % 32 == 16 || r % 32 == 17) && (c % 32 == 16 || c % 32 == 17);
            return hit ? std::pair<int, HermMat>(1, target)
                       : std::pair<int, HermMat>(0, background);
        });
    } else {
        throw InvalidDataError("make_scene: unknown scene \"" + name + "\"");
    }
    return s;
}

} // namespace mulog
