#include "mulog/convolve.hpp"

#include <cmath>

#include "mulog/errors.hpp"
#include "mulog/parallel.hpp"

namespace mulog {

std::vector<double> gaussian_taps(double sigma) {
    if (!(sigma > 0.0)) throw Error("gaussian_taps: sigma must be > 0");
    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
        taps[i + radius] = v;
        sum += v;
    }
    for (double& t : taps) t /= sum;
    return taps;
}

namespace {

inline int wrap_index(int i, int n, Boundary b) {
    if (i >= 0 && i < n) return i;
    if (b == Boundary::Periodic) {
        i %= n;
        return i < 0 ? i + n : i;
    }
    // symmetric reflection, repeating until in range (kernels can exceed n)
    for (;;) {
        if (i < 0)
            i = -i - 1;
        else if (i >= n)
            i = 2 * n - 1 - i;
        else
            return i;
    }
}

} // namespace

PlaneImage convolve_separable(const PlaneImage& img, const std::vector<double>& taps,
                              Boundary boundary) {
    const int w = img.width, h = img.height;
    const int radius = static_cast<int>(taps.size() / 2);
    PlaneImage tmp(w, h), out(w, h);

    parallel_for(static_cast<std::size_t>(h), [&](std::size_t rb, std::size_t re) {
        for (std::size_t r = rb; r < re; ++r)
            for (int c = 0; c < w; ++c) {
                double acc = 0.0;
                for (int t = -radius; t <= radius; ++t)
                    acc += taps[t + radius] * img.at(static_cast<int>(r), wrap_index(c + t, w, boundary));
                tmp.at(static_cast<int>(r), c) = acc;
            }
    });
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t rb, std::size_t re) {
        for (std::size_t r = rb; r < re; ++r)
            for (int c = 0; c < w; ++c) {
                double acc = 0.0;
                for (int t = -radius; t <= radius; ++t)
                    acc += taps[t + radius] * tmp.at(wrap_index(static_cast<int>(r) + t, h, boundary), c);
                out.at(static_cast<int>(r), c) = acc;
            }
    });
    return out;
}

} // namespace mulog
