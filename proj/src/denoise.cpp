#include "mulog/denoise.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "mulog/container.hpp"
#include "mulog/errors.hpp"
#include "mulog/parallel.hpp"
#include "mulog/rng.hpp"

namespace mulog {

PlaneImage DenoiserHandle::operator()(const PlaneImage& img, double sigma) const {
    if (!(sigma >= 0.0)) throw DenoiserContractError(name + ": sigma must be >= 0");
    PlaneImage out = fn(img, sigma);
    if (out.width != img.width || out.height != img.height)
        throw DenoiserContractError(name + ": output shape differs from input");
    for (double v : out.data)
        if (!std::isfinite(v)) throw DenoiserContractError(name + ": non-finite output");
    return out;
}

namespace {

inline int prev_index(int i) { return i > 0 ? i - 1 : 0; }

// Forward-difference gradient with the boundary convention of the dual TV
// scheme: zero at the far edge (reflective) or wraparound (periodic).
inline void grad_at(const PlaneImage& u, int r, int c, Boundary bd, double& gx, double& gy) {
    const int w = u.width, h = u.height;
    if (bd == Boundary::Periodic) {
        gx = u.at(r, (c + 1) % w) - u.at(r, c);
        gy = u.at((r + 1) % h, c) - u.at(r, c);
    } else {
        gx = (c + 1 < w) ? u.at(r, c + 1) - u.at(r, c) : 0.0;
        gy = (r + 1 < h) ? u.at(r + 1, c) - u.at(r, c) : 0.0;
    }
}

} // namespace

double total_variation(const PlaneImage& img, Boundary boundary) {
    double acc = 0.0;
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            double gx, gy;
            grad_at(img, r, c, boundary, gx, gy);
            acc += std::sqrt(gx * gx + gy * gy);
        }
    return acc;
}

PlaneImage tv_denoise(const PlaneImage& img, double sigma, const TvConfig& cfg) {
    if (!(sigma >= 0.0)) throw Error("tv_denoise: sigma must be >= 0");
    const double weight = cfg.lambda_scale * sigma * sigma;
    if (weight == 0.0) return img;
    const int w = img.width, h = img.height;
    const std::size_t n = img.size();
    const Boundary bd = cfg.boundary;

    // Dual fields; px/py hold p^t, div holds div p^t.
    PlaneImage px(w, h), py(w, h), div(w, h), work(w, h);
    const double tau = 1.0 / 8.0;

    auto divergence = [&](const PlaneImage& x, const PlaneImage& y, PlaneImage& out) {
        parallel_for(static_cast<std::size_t>(h), [&](std::size_t rb, std::size_t re) {
            for (int r = static_cast<int>(rb); r < static_cast<int>(re); ++r)
                for (int c = 0; c < w; ++c) {
                    double dx, dy;
                    if (bd == Boundary::Periodic) {
                        dx = x.at(r, c) - x.at(r, (c + w - 1) % w);
                        dy = y.at(r, c) - y.at((r + h - 1) % h, c);
                    } else {
                        dx = x.at(r, c) - (c > 0 ? x.at(r, prev_index(c)) : 0.0);
                        if (c == w - 1) dx = -x.at(r, prev_index(c));
                        dy = y.at(r, c) - (r > 0 ? y.at(prev_index(r), c) : 0.0);
                        if (r == h - 1) dy = -y.at(prev_index(r), c);
                    }
                    out.at(r, c) = dx + dy;
                }
        });
    };

    for (int it = 0; it < cfg.max_iters; ++it) {
        divergence(px, py, div);
        for (std::size_t k = 0; k < n; ++k) work.data[k] = div.data[k] - img.data[k] / weight;

        std::vector<double> chunk_max((n + 4095) / 4096, 0.0);
        parallel_for(n, [&](std::size_t kb, std::size_t ke) {
            double local = 0.0;
            for (std::size_t k = kb; k < ke; ++k) {
                int r = static_cast<int>(k) / w;
                int c = static_cast<int>(k) % w;
                double gx, gy;
                grad_at(work, r, c, bd, gx, gy);
                double denom = 1.0 + tau * std::sqrt(gx * gx + gy * gy);
                double nx = (px.data[k] + tau * gx) / denom;
                double ny = (py.data[k] + tau * gy) / denom;
                local = std::max(local, std::max(std::abs(nx - px.data[k]), std::abs(ny - py.data[k])));
                px.data[k] = nx;
                py.data[k] = ny;
            }
            chunk_max[kb / 4096] = local;
        });
        double step = *std::max_element(chunk_max.begin(), chunk_max.end());
        if (step <= cfg.tol) break;
    }

    divergence(px, py, div);
    PlaneImage out(w, h);
    for (std::size_t k = 0; k < n; ++k) out.data[k] = img.data[k] - weight * div.data[k];
    return out;
}

PlaneImage gaussian_smooth_denoise(const PlaneImage& img, double sigma, Boundary boundary) {
    double spatial = std::clamp(sigma, 0.5, 3.0);
    return convolve_separable(img, gaussian_taps(spatial), boundary);
}

DenoiserHandle tv_denoiser(const TvConfig& cfg) {
    return {"tv", [cfg](const PlaneImage& img, double s) { return tv_denoise(img, s, cfg); }, true};
}

DenoiserHandle gaussian_denoiser() {
    return {"gauss",
            [](const PlaneImage& img, double s) {
                return gaussian_smooth_denoise(img, s, Boundary::Reflective);
            },
            true};
}

DenoiserHandle identity_denoiser() {
    return {"identity", [](const PlaneImage& img, double) { return img; }, true};
}

namespace {

std::atomic<unsigned> g_ext_counter{0};

std::string substitute(std::string tpl, const std::string& key, const std::string& value) {
    for (;;) {
        auto pos = tpl.find(key);
        if (pos == std::string::npos) return tpl;
        tpl.replace(pos, key.size(), value);
    }
}

// Runs a shell command with a wall-clock timeout; returns the exit status.
int run_with_timeout(const std::string& cmd, double timeout_seconds, bool& timed_out) {
    timed_out = false;
    pid_t pid = fork();
    if (pid < 0) throw DenoiserContractError("external denoiser: fork failed");
    if (pid == 0) {
        execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    auto start = std::chrono::steady_clock::now();
    for (;;) {
        int status = 0;
        pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            if (WIFEXITED(status)) return WEXITSTATUS(status);
            return -1;
        }
        if (r < 0 && errno != EINTR) throw DenoiserContractError("external denoiser: waitpid failed");
        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed > timeout_seconds) {
            kill(pid, SIGKILL);
            waitpid(pid, nullptr, 0);
            timed_out = true;
            return -1;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
}

std::string format_sigma(double sigma) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", sigma);
    return buf;
}

} // namespace

DenoiserHandle external_denoiser(const std::string& command_template, double timeout_seconds) {
    if (command_template.find("{input}") == std::string::npos ||
        command_template.find("{output}") == std::string::npos)
        throw DenoiserContractError("external denoiser template must contain {input} and {output}");
    auto fn = [command_template, timeout_seconds](const PlaneImage& img, double sigma) {
        unsigned id = g_ext_counter.fetch_add(1);
        std::string dir = "/tmp";
        if (const char* t = std::getenv("TMPDIR")) dir = t;
        std::string base = dir + "/mulog_ext_" + std::to_string(getpid()) + "_" + std::to_string(id);
        std::string in_path = base + "_in.mulg";
        std::string out_path = base + "_out.mulg";
        write_plane(in_path, img);
        std::string cmd = substitute(command_template, "{input}", in_path);
        cmd = substitute(cmd, "{output}", out_path);
        cmd = substitute(cmd, "{sigma}", format_sigma(sigma));
        bool timed_out = false;
        int status = run_with_timeout(cmd, timeout_seconds, timed_out);
        PlaneImage result;
        std::string failure;
        if (timed_out) {
            failure = "external denoiser timed out: " + cmd;
        } else if (status != 0) {
            failure = "external denoiser exited with status " + std::to_string(status) + ": " + cmd;
        } else {
            try {
                result = read_plane(out_path);
            } catch (const Error& e) {
                failure = std::string("external denoiser produced malformed output: ") + e.what();
            }
        }
        std::remove(in_path.c_str());
        std::remove(out_path.c_str());
        if (!failure.empty()) throw DenoiserContractError(failure);
        return result;
    };
    return {"ext", fn, false};
}

DenoiserHandle make_denoiser(const std::string& spec, const TvConfig& tv_cfg) {
    if (spec == "tv") return tv_denoiser(tv_cfg);
    if (spec == "gauss") return gaussian_denoiser();
    if (spec == "identity") return identity_denoiser();
    if (spec.rfind("ext:", 0) == 0) return external_denoiser(spec.substr(4));
    throw Error("unknown denoiser spec: " + spec + " (expected tv, gauss, identity or ext:<command>)");
}

BoundednessReport audit_boundedness(const DenoiserHandle& d, int width, int height,
                                    std::uint64_t seed) {
    PlaneImage noise(width, height);
    for (std::size_t k = 0; k < noise.size(); ++k) {
        Philox rng(seed, k);
        noise.data[k] = rng.normal();
    }
    BoundednessReport report;
    report.denoiser = d.name;
    report.sigmas = {0.25, 0.5, 1.0, 2.0};
    report.constant = 0.0;
    for (double s : report.sigmas) {
        PlaneImage out = d(noise, s);
        double acc = 0.0;
        for (std::size_t k = 0; k < noise.size(); ++k) {
            double diff = out.data[k] - noise.data[k];
            acc += diff * diff;
        }
        double ratio = acc / (static_cast<double>(noise.size()) * s * s);
        report.ratios.push_back(ratio);
        report.constant = std::max(report.constant, ratio);
    }
    return report;
}

} // namespace mulog
