#include "mulog/admm.hpp"

#include <cmath>
#include <string>

#include "mulog/parallel.hpp"
#include "mulog/statistics.hpp"

namespace mulog {

namespace {

struct LoopCallbacks {
    // Solves the per-pixel fidelity subproblems with anchor image a.
    std::function<void(const ChannelImage& a, ChannelImage& x)> solve;
    // Data term for diagnostics.
    std::function<double(const ChannelImage& x)> nll;
};

PlaneImage channel_plane(const ChannelImage& img, int c) { return img.extract(c); }

void denoise_channels(const DenoiserHandle& denoiser, const ChannelImage& src, double sigma,
                      ChannelImage& dst, int iteration) {
    auto run_one = [&](int c) {
        try {
            PlaneImage out = denoiser(channel_plane(src, c), sigma);
            dst.insert(c, out);
        } catch (const DenoiserContractError& e) {
            throw DenoiserContractError(std::string(e.what()) + " (iteration " +
                                        std::to_string(iteration) + ", channel " + std::to_string(c) +
                                        ")");
        }
    };
    if (denoiser.reentrant && src.channels > 1 && thread_count() > 1) {
        // one worker per channel; channel results are independent
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(src.channels);
        for (int c = 1; c < src.channels; ++c)
            pool.emplace_back([&, c] {
                try {
                    run_one(c);
                } catch (...) {
                    errors[c] = std::current_exception();
                }
            });
        try {
            run_one(0);
        } catch (...) {
            errors[0] = std::current_exception();
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    } else {
        for (int c = 0; c < src.channels; ++c) run_one(c);
    }
}

ChannelImage run_loop(const ChannelImage& y, double looks, double beta_default,
                      double init_sigma_default, const MulogOptions& opts,
                      const LoopCallbacks& cb) {
    const int nch = y.channels;
    const std::size_t n = y.pixels();
    double beta = opts.beta.value_or(beta_default);
    if (!(beta > 0.0)) throw Error("plug-and-play: beta must be > 0");
    if (opts.outer_iters < 1) throw Error("plug-and-play: outer_iters must be >= 1");
    (void)looks;

    ChannelImage x = y;
    ChannelImage z(y.width, y.height, nch);
    ChannelImage d(y.width, y.height, nch);
    ChannelImage v(y.width, y.height, nch);
    ChannelImage a(y.width, y.height, nch);

    double init_sigma = opts.init_sigma.value_or(init_sigma_default);
    denoise_channels(opts.denoiser, y, init_sigma, z, 0);
    for (int c = 0; c < nch; ++c)
        for (std::size_t k = 0; k < n; ++k) d.plane(c)[k] = z.plane(c)[k] - x.plane(c)[k];

    for (int it = 1; it <= opts.outer_iters; ++it) {
        double sigma = 1.0 / std::sqrt(beta);
        for (int c = 0; c < nch; ++c)
            for (std::size_t k = 0; k < n; ++k) v.plane(c)[k] = x.plane(c)[k] - d.plane(c)[k];
        denoise_channels(opts.denoiser, v, sigma, z, it);
        for (int c = 0; c < nch; ++c)
            for (std::size_t k = 0; k < n; ++k) {
                d.plane(c)[k] += z.plane(c)[k] - x.plane(c)[k];
                a.plane(c)[k] = z.plane(c)[k] + d.plane(c)[k];
            }
        cb.solve(a, x);

        if (opts.diagnostics) {
            IterationRecord rec;
            rec.iter = it;
            rec.beta = beta;
            rec.sigma = sigma;
            rec.nll = cb.nll(x);
            rec.objective = rec.nll + (opts.prior_eval ? opts.prior_eval(x) : 0.0);
            double acc = 0.0;
            for (int c = 0; c < nch; ++c)
                for (std::size_t k = 0; k < n; ++k) {
                    double diff = z.plane(c)[k] - x.plane(c)[k];
                    acc += diff * diff;
                }
            rec.primal_residual = std::sqrt(acc);
            rec.channel_mad.resize(nch, 0.0);
            if (n >= 16) {
                PlaneImage res(y.width, y.height);
                for (int c = 0; c < nch; ++c) {
                    for (std::size_t k = 0; k < n; ++k)
                        res.data[k] = x.plane(c)[k] - y.plane(c)[k];
                    rec.channel_mad[c] = mad_sigma(res);
                }
            }
            opts.diagnostics(rec);
        }
        beta *= opts.beta_growth;
    }
    return x;
}

} // namespace

ChannelImage plug_and_play_matrix(const ChannelImage& y, const ChannelBasis& basis,
                                  double looks, const MulogOptions& opts) {
    if (y.channels != basis.channels())
        throw Error("plug_and_play_matrix: channel count does not match basis");
    const std::size_t n = y.pixels();
    const int nch = y.channels;
    double beta0 = opts.beta.value_or(1.0 + 2.0 / looks);

    LoopCallbacks cb;
    int iter_count = 0;
    // the anchor weight follows the same beta schedule as the denoiser sigma
    cb.solve = [&, beta0](const ChannelImage& a, ChannelImage& x) mutable {
        double beta = beta0 * std::pow(opts.beta_growth, iter_count++);
        parallel_for(n, [&](std::size_t kb, std::size_t ke) {
            FidelityProblem p;
            p.basis = &basis;
            p.beta = beta;
            p.looks = looks;
            p.q = opts.q;
            p.y.resize(nch);
            p.a.resize(nch);
            std::vector<double> init(nch);
            for (std::size_t k = kb; k < ke; ++k) {
                for (int c = 0; c < nch; ++c) {
                    p.y[c] = y.plane(c)[k];
                    p.a[c] = a.plane(c)[k];
                    init[c] = x.plane(c)[k]; // warm start from the previous outer iterate
                }
                try {
                    std::vector<double> sol = newton_matrix(p, opts.newton_iters, &init);
                    for (int c = 0; c < nch; ++c) x.plane(c)[k] = sol[c];
                } catch (const Error& e) {
                    throw Error(std::string(e.what()) + " (pixel " + std::to_string(k) + ")");
                }
            }
        });
    };
    cb.nll = [&](const ChannelImage& x) { return neg_log_likelihood(x, y, looks, basis); };

    return run_loop(y, looks, 1.0 + 2.0 / looks, 1.0, opts, cb);
}

PlaneImage plug_and_play_scalar(const PlaneImage& y, double looks, double beta_default,
                                const MulogOptions& opts) {
    ChannelImage yc(y.width, y.height, 1);
    yc.insert(0, y);
    const std::size_t n = yc.pixels();
    double beta = opts.beta.value_or(beta_default);

    LoopCallbacks cb;
    int iter_count = 0;
    cb.solve = [&, beta](const ChannelImage& a, ChannelImage& x) mutable {
        double current = beta * std::pow(opts.beta_growth, iter_count++);
        parallel_for(n, [&](std::size_t kb, std::size_t ke) {
            for (std::size_t k = kb; k < ke; ++k) {
                double warm = x.plane(0)[k];
                x.plane(0)[k] = newton_scalar(yc.plane(0)[k], a.plane(0)[k], current, looks,
                                              opts.newton_iters, &warm);
            }
        });
    };
    cb.nll = [&](const ChannelImage& x) {
        return looks * block_sum(n, [&](std::size_t k) {
                   double xv = x.plane(0)[k];
                   return xv + std::exp(yc.plane(0)[k] - xv);
               });
    };

    double init_sigma_default = std::sqrt(polygamma(1, looks));
    ChannelImage out = run_loop(yc, looks, beta_default, init_sigma_default, opts, cb);
    return out.extract(0);
}

MulogResult mulog(const CovImage& c, double looks, const MulogOptions& opts) {
    if (!(looks > 0.0)) throw Error("mulog: looks must be > 0");
    CovImage conditioned = condition_input(c, looks);
    HermStack logs = mat_log(conditioned.stack);
    ChannelBasis basis = calibrate(conditioned, looks);
    ChannelImage y = omega_inv_image(logs, c.width, c.height, basis);
    ChannelImage x = plug_and_play_matrix(y, basis, looks, opts);
    MulogResult result;
    result.basis = basis;
    result.sigma_hat = CovImage(c.width, c.height, c.dim(), looks);
    result.sigma_hat.stack = mat_exp(omega_image(x, basis));
    return result;
}

PlaneImage midal(const PlaneImage& intensity, double looks, const MulogOptions& opts) {
    if (!(looks > 0.0)) throw Error("midal: looks must be > 0");
    PlaneImage y(intensity.width, intensity.height);
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (!(intensity.data[k] > 0.0))
            throw InvalidDataError("midal: nonpositive intensity (pixel " + std::to_string(k) + ")",
                                   static_cast<long>(k));
        y.data[k] = std::log(intensity.data[k]);
    }
    double beta_default = (1.0 + 2.0 / looks) / polygamma(1, looks);
    PlaneImage x = plug_and_play_scalar(y, looks, beta_default, opts);
    PlaneImage out(x.width, x.height);
    for (std::size_t k = 0; k < x.size(); ++k) out.data[k] = std::exp(x.data[k]);
    return out;
}

PlaneImage homomorphic(const PlaneImage& intensity, double looks,
                       const DenoiserHandle& denoiser) {
    if (!(looks > 0.0)) throw Error("homomorphic: looks must be > 0");
    PlaneImage y(intensity.width, intensity.height);
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (!(intensity.data[k] > 0.0))
            throw InvalidDataError("homomorphic: nonpositive intensity (pixel " +
                                       std::to_string(k) + ")",
                                   static_cast<long>(k));
        y.data[k] = std::log(intensity.data[k]);
    }
    FTStats stats = ft_stats(looks);
    PlaneImage den = denoiser(y, std::sqrt(stats.variance));
    PlaneImage out(y.width, y.height);
    for (std::size_t k = 0; k < y.size(); ++k) out.data[k] = std::exp(den.data[k] - stats.bias);
    return out;
}

std::function<double(const ChannelImage&)> tv_prior(double lambda, Boundary boundary) {
    return [lambda, boundary](const ChannelImage& x) {
        double acc = 0.0;
        for (int c = 0; c < x.channels; ++c) acc += total_variation(x.extract(c), boundary);
        return lambda * acc;
    };
}

} // namespace mulog
