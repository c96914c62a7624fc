// Command-line surface: simulate speckle, despeckle, evaluate, benchmark the
// fidelity solver, run a single denoiser pass, export viewable images.
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mulog/admm.hpp"
#include "mulog/container.hpp"
#include "mulog/denoise.hpp"
#include "mulog/errors.hpp"
#include "mulog/fidelity.hpp"
#include "mulog/metrics.hpp"
#include "mulog/parallel.hpp"
#include "mulog/scenes.hpp"
#include "mulog/statistics.hpp"

namespace {

using namespace mulog;

// Argument combinations the parser cannot catch (wrong dimension for a
// method, missing looks, unknown builtin). Mapped to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string derive_ref_path(const std::string& out) {
    std::size_t slash = out.find_last_of('/');
    std::size_t dot = out.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
        return out.substr(0, dot) + ".ref" + out.substr(dot);
    return out + ".ref";
}

PlaneImage first_plane(const CovImage& img) {
    PlaneImage p(img.width, img.height);
    const double* src = img.stack.plane(0);
    std::copy(src, src + img.pixels(), p.data.begin());
    return p;
}

CovImage plane_to_cov(const PlaneImage& p, double looks) {
    CovImage c(p.width, p.height, 1, looks);
    std::copy(p.data.begin(), p.data.end(), c.stack.plane(0));
    return c;
}

struct SimulateArgs {
    std::string gt;
    std::string out;
    std::string ref_out;
    int dim = 1;
    int width = 256;
    int height = 256;
    double looks = 1.0;
    std::uint64_t seed = 1;
    bool geometry_given = false;
};

int run_simulate(const SimulateArgs& a) {
    CovImage truth;
    if (a.gt.rfind("builtin:", 0) == 0) {
        truth = make_scene(a.gt.substr(8), a.width, a.height, a.dim).truth;
    } else {
        if (a.geometry_given)
            throw UsageError("--dim/--width/--height apply only to builtin scenes");
        truth = read_container(a.gt).image;
    }
    const int d = truth.dim();
    if (!(a.looks > 0.0)) throw UsageError("--looks must be > 0");

    CovImage noisy;
    if (d == 1) {
        noisy = plane_to_cov(sample_gamma_speckle(first_plane(truth), a.looks, a.seed), a.looks);
    } else {
        if (a.looks != std::floor(a.looks))
            throw UsageError("multichannel simulation needs an integer number of looks");
        noisy = sample_wishart_image(truth, static_cast<int>(a.looks), a.seed);
    }
    write_container(a.out, noisy);
    truth.looks = 0.0; // reference marker
    write_container(a.ref_out.empty() ? derive_ref_path(a.out) : a.ref_out, truth);
    return 0;
}

struct DespeckleArgs {
    std::string in;
    std::string out;
    std::string method = "mulog";
    std::string denoiser = "tv";
    std::string diag;
    std::optional<double> looks;
    std::optional<double> beta;
    int iters = 6;
    int q = 1;
};

int run_despeckle(const DespeckleArgs& a) {
    CovContainer in = read_container(a.in);
    double looks = a.looks.value_or(in.image.looks);
    if (!(looks > 0.0))
        throw UsageError("input header has no usable looks value; pass --looks");

    MulogOptions opts;
    opts.outer_iters = a.iters;
    opts.q = a.q;
    opts.beta = a.beta;
    opts.denoiser = make_denoiser(a.denoiser);

    std::ofstream diag;
    if (!a.diag.empty()) {
        diag.open(a.diag, std::ios::trunc);
        if (!diag) throw IoError("cannot open diagnostics file " + a.diag);
        opts.diagnostics = [&diag](const IterationRecord& rec) {
            nlohmann::ordered_json j;
            j["iter"] = rec.iter;
            j["beta"] = rec.beta;
            j["sigma"] = rec.sigma;
            j["nll"] = rec.nll;
            j["objective"] = rec.objective;
            j["primal_residual"] = rec.primal_residual;
            j["channel_mad"] = rec.channel_mad;
            diag << j.dump() << '\n';
        };
        if (a.denoiser == "tv") opts.prior_eval = tv_prior(TvConfig{}.lambda_scale);
    }

    if (a.method == "mulog") {
        MulogResult res = ::mulog::mulog(in.image, looks, opts);
        write_container(a.out, res.sigma_hat, &res.basis);
    } else if (a.method == "midal" || a.method == "homomorphic") {
        if (in.image.dim() != 1)
            throw UsageError("--method " + a.method + " requires single-channel input");
        PlaneImage intensity = first_plane(in.image);
        PlaneImage est = a.method == "midal" ? midal(intensity, looks, opts)
                                             : homomorphic(intensity, looks, opts.denoiser);
        write_container(a.out, plane_to_cov(est, looks));
    } else {
        throw UsageError("unknown method \"" + a.method + "\"");
    }
    return 0;
}

struct EvaluateArgs {
    std::string est;
    std::string ref;
    std::string report;
};

int run_evaluate(const EvaluateArgs& a) {
    CovImage est = read_container(a.est).image;
    CovImage ref = read_container(a.ref).image;
    QualityReport rep = compare_images(est, ref);
    std::cout << report_table(rep);
    if (!a.report.empty()) {
        std::ofstream f(a.report, std::ios::trunc);
        if (!f) throw IoError("cannot open report file " + a.report);
        f << report_json(rep) << '\n';
    }
    return 0;
}

struct AccuracyArgs {
    std::vector<int> dims = {2, 4, 8, 16};
    int trials = 100;
    std::uint64_t seed = 1;
    std::string out;
};

int run_solver_accuracy(const AccuracyArgs& a) {
    const std::vector<int> qs = {0, 1, 2, 4, 8, 16};
    SolverAccuracy acc = solver_accuracy_experiment(a.dims, qs, a.trials, a.seed);

    std::string table = "# mean relative Newton residual after 10 iterations\n#     ";
    char buf[64];
    for (int q : qs) {
        std::snprintf(buf, sizeof(buf), "q=%-9d", q);
        table += buf;
    }
    table += '\n';
    for (std::size_t i = 0; i < acc.dims.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "D=%-4d", acc.dims[i]);
        table += buf;
        for (std::size_t j = 0; j < qs.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%-11.3e", acc.residual[i][j]);
            table += buf;
        }
        table += '\n';
    }
    if (a.out.empty()) {
        std::cout << table;
    } else {
        std::ofstream f(a.out, std::ios::trunc);
        if (!f) throw IoError("cannot open output file " + a.out);
        f << table;
    }
    return 0;
}

struct DenoiseArgs {
    std::string in;
    std::string out;
    std::string denoiser = "tv";
    double sigma = 1.0;
};

// Single denoiser pass on a plane container; makes the CLI usable as its own
// external denoiser:  ... denoise --in {input} --sigma {sigma} --out {output}
int run_denoise(const DenoiseArgs& a) {
    PlaneImage img = read_plane(a.in);
    DenoiserHandle den = make_denoiser(a.denoiser);
    write_plane(a.out, den(img, a.sigma));
    return 0;
}

struct ExportArgs {
    std::string in;
    std::string out;
    double gamma = 0.7;
};

// 8-bit PGM preview: amplitude (or total intensity) saturated at its 99th
// percentile, gamma-compressed.
int run_export(const ExportArgs& a) {
    CovImage img = read_container(a.in).image;
    PlaneImage plane = metric_plane(img);
    double peak = quantile(plane.data, 0.99);
    if (!(peak > 0.0)) throw InvalidDataError("export: image has no positive values");
    std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open output file " + a.out);
    f << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row(img.width);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            double v = std::min(plane.at(r, c) / peak, 1.0);
            v = std::pow(std::max(v, 0.0), a.gamma);
            row[c] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        f.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"speckle reduction for single- and multichannel covariance images"};
    app.require_subcommand(1);
    app.fallthrough(); // accept global flags after the subcommand too

    int threads = 0;
    app.add_option("--threads", threads, "worker thread cap, 0 = all cores")
        ->capture_default_str();

    SimulateArgs sim;
    CLI::App* c_sim = app.add_subcommand("simulate", "sample a speckled image from a scene");
    c_sim->add_option("--gt", sim.gt, "builtin:<name> or a container file")->required();
    c_sim->add_option("--out", sim.out, "noisy output container")->required();
    c_sim->add_option("--ref-out", sim.ref_out, "reference output (default: <out>.ref)");
    CLI::Option* o_dim = c_sim->add_option("--dim", sim.dim, "channel count for builtin scenes");
    CLI::Option* o_w = c_sim->add_option("--width", sim.width, "builtin scene width");
    CLI::Option* o_h = c_sim->add_option("--height", sim.height, "builtin scene height");
    c_sim->add_option("--looks", sim.looks, "number of looks")->capture_default_str();
    c_sim->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();

    DespeckleArgs dsp;
    CLI::App* c_dsp = app.add_subcommand("despeckle", "estimate the speckle-free covariance");
    c_dsp->add_option("--in", dsp.in, "input container")->required();
    c_dsp->add_option("--out", dsp.out, "output container")->required();
    c_dsp->add_option("--method", dsp.method, "mulog | midal | homomorphic")
        ->capture_default_str();
    c_dsp->add_option("--denoiser", dsp.denoiser, "tv | gauss | identity | ext:<template>")
        ->capture_default_str();
    c_dsp->add_option("--looks", dsp.looks, "override the header looks value");
    c_dsp->add_option("--iters", dsp.iters, "outer iterations")->capture_default_str();
    c_dsp->add_option("--beta", dsp.beta, "coupling weight (default 1 + 2/looks)");
    c_dsp->add_option("--Q", dsp.q, "midpoint-rule resolution, 0 = commuting surrogate")
        ->capture_default_str();
    c_dsp->add_option("--diag", dsp.diag, "per-iteration diagnostics file (JSON lines)");

    EvaluateArgs ev;
    CLI::App* c_ev = app.add_subcommand("evaluate", "compare an estimate to a reference");
    c_ev->add_option("--est", ev.est, "estimate container")->required();
    c_ev->add_option("--ref", ev.ref, "reference container")->required();
    c_ev->add_option("--report", ev.report, "machine-readable report file (JSON line)");

    AccuracyArgs acc;
    CLI::App* c_acc = app.add_subcommand(
        "solver-accuracy", "benchmark the fidelity solver across dimensions and Q");
    c_acc->add_option("--dims", acc.dims, "matrix dimensions")->delimiter(',')
        ->capture_default_str();
    c_acc->add_option("--trials", acc.trials, "random problems per dimension")
        ->capture_default_str();
    c_acc->add_option("--seed", acc.seed, "RNG seed")->capture_default_str();
    c_acc->add_option("--out", acc.out, "write the table here instead of stdout");

    DenoiseArgs dn;
    CLI::App* c_dn = app.add_subcommand("denoise", "run one denoiser pass on a plane container");
    c_dn->add_option("--in", dn.in, "input plane container")->required();
    c_dn->add_option("--out", dn.out, "output plane container")->required();
    c_dn->add_option("--sigma", dn.sigma, "noise std")->required();
    c_dn->add_option("--denoiser", dn.denoiser, "tv | gauss | identity | ext:<template>")
        ->capture_default_str();

    ExportArgs ex;
    CLI::App* c_ex = app.add_subcommand("export", "write an 8-bit PGM preview");
    c_ex->add_option("--in", ex.in, "input container")->required();
    c_ex->add_option("--out", ex.out, "output PGM file")->required();
    c_ex->add_option("--gamma", ex.gamma, "display gamma")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    sim.geometry_given = o_dim->count() > 0 || o_w->count() > 0 || o_h->count() > 0;
    set_thread_count(threads);

    try {
        if (c_sim->parsed()) return run_simulate(sim);
        if (c_dsp->parsed()) return run_despeckle(dsp);
        if (c_ev->parsed()) return run_evaluate(ev);
        if (c_acc->parsed()) return run_solver_accuracy(acc);
        if (c_dn->parsed()) return run_denoise(dn);
        if (c_ex->parsed()) return run_export(ex);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
