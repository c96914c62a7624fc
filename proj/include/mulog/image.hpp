#pragma once

#include <cstddef>
#include <vector>

#include "mulog/hermitian.hpp"

namespace mulog {

// Row-major single-channel real image.
struct PlaneImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    PlaneImage() = default;
    PlaneImage(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::size_t size() const noexcept { return data.size(); }
    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
};

// Multichannel real image stored channel-major: channel c occupies one
// contiguous plane, which is what per-channel denoisers consume.
struct ChannelImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    ChannelImage() = default;
    ChannelImage(int w, int h, int ch)
        : width(w), height(h), channels(ch),
          data(static_cast<std::size_t>(w) * h * ch, 0.0) {}

    std::size_t pixels() const noexcept { return static_cast<std::size_t>(width) * height; }
    double* plane(int c) { return data.data() + static_cast<std::size_t>(c) * pixels(); }
    const double* plane(int c) const { return data.data() + static_cast<std::size_t>(c) * pixels(); }

    PlaneImage extract(int c) const {
        PlaneImage p(width, height);
        const double* src = plane(c);
        std::copy(src, src + pixels(), p.data.begin());
        return p;
    }
    void insert(int c, const PlaneImage& p) {
        std::copy(p.data.begin(), p.data.end(), plane(c));
    }
};

// Covariance image: an h x w field of d x d Hermitian matrices plus the
// nominal number of looks. Pixel k = r * width + c.
struct CovImage {
    int width = 0;
    int height = 0;
    double looks = 1.0;
    HermStack stack;

    CovImage() = default;
    CovImage(int w, int h, int d, double l)
        : width(w), height(h), looks(l), stack(static_cast<std::size_t>(w) * h, d) {}

    int dim() const noexcept { return stack.dim(); }
    std::size_t pixels() const noexcept { return stack.count(); }
};

} // namespace mulog
