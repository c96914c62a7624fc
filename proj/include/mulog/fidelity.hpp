#pragma once

#include <cstdint>
#include <vector>

#include "mulog/channelizer.hpp"

namespace mulog {

// One pixel of the log-domain data-fidelity subproblem
//   argmin_x  beta/2 ||x - a||^2
//             + L tr( Omega(x) + exp(Omega(y)) exp(-Omega(x)) )
// posed on the d^2 standardized channels of the given basis.
struct FidelityProblem {
    std::vector<double> y; // observed channels
    std::vector<double> a; // quadratic anchor (z + d in the outer loop)
    double beta = 1.0;
    double looks = 1.0;
    int q = 1;             // midpoint-rule resolution; 0 = commuting surrogate
    const ChannelBasis* basis = nullptr;
};

// Scalar (d = 1, identity basis) damped Newton iteration
//   x <- x - [beta (x - a) + L (1 - e^{y-x})] / [beta + L e^{y-x}]
// from `init` when given, else from x = y. The fixed point solves
// beta(x-a) + L(1 - e^{y-x}) = 0. Steps are clamped to +-3 and halved until
// the scalar objective stops increasing, mirroring newton_matrix at d = 1.
double newton_scalar(double y, double a, double beta, double looks, int iters = 10,
                     const double* init = nullptr);

// Matrix-case quasi-Newton update with the q-point midpoint approximation of
//   integral_0^1 exp((u-1) Omega(x)) exp(Omega(y)) exp(-u Omega(x)) du
// (q == 0 substitutes exp(Omega(y) - Omega(x))). Denominators are
// |beta + L Omega*(integral)| entrywise, clamped below at 1e-12 * beta.
// Starts at `init` when given (else x = y) and runs up to `iters` updates.
// Each channel moves at most 3 per update, and a step that raises the
// objective is halved until it descends (the curvature surrogate can cancel
// to ~0, and an unguarded step would overflow the quadrature or oscillate).
std::vector<double> newton_matrix(const FidelityProblem& p, int iters = 10,
                                  const std::vector<double>* init = nullptr);

// One quasi-Newton update vector at the given x (the clamped step before any
// backtracking). Exposed for solver-accuracy measurements.
std::vector<double> newton_step(const FidelityProblem& p, const std::vector<double>& x);

// Gradient of the fidelity objective in x:
//   beta (x - a) + L Omega*( I - integral )
// Requires q >= 1.
std::vector<double> nll_gradient(const FidelityProblem& p, const std::vector<double>& x);

// Diagonal curvature surrogate beta + L |Omega*(integral)| (entrywise).
std::vector<double> hessian_diag_approx(const FidelityProblem& p, const std::vector<double>& x);

// The objective value itself (exact, no quadrature).
double fidelity_objective(const FidelityProblem& p, const std::vector<double>& x);

// Solver-accuracy experiment: for each dimension d, draw `trials` random
// (Sigma, C ~ Wishart(Sigma, L = d)) single-pixel problems with the identity
// basis, anchor a = kappa^{-1}(log Sigma) and beta = 10 L; run 10 plain
// quasi-Newton updates at each q and record the mean of
// ||step_{q=100}(x_final)|| / ||x_final||. Sigma is a normalized 8d-sample
// Wishart draw, which keeps its conditioning bounded as d grows.
struct SolverAccuracy {
    std::vector<int> dims;
    std::vector<int> qs;
    // residual[i][j]: mean relative residual for dims[i], qs[j]
    std::vector<std::vector<double>> residual;
};
SolverAccuracy solver_accuracy_experiment(const std::vector<int>& dims,
                                          const std::vector<int>& qs, int trials,
                                          std::uint64_t seed);

} // namespace mulog
