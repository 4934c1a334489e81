#pragma once

// Constrained minimization of K + P at fixed U, symmetric decreasing
// rearrangement, the Nehari-type identity and a random coercivity probe.

#include <cstdint>
#include <string>
#include <vector>

#include "fracwave/evolution.hpp"

namespace fracwave {

struct MinimizerConfig {
    double target_U = -0.1;
    double step = 1.0;
    int max_iter = 20000;
    double tol = 1e-9;  ///< relative H^{alpha/2} size of the projected gradient
    bool use_rearrangement = false;

    void validate() const;
};

struct MinimizeTrace {
    std::vector<double> energy;  ///< K + P per accepted iterate
    int iterations = 0;
    double theta = 0.0;  ///< Euler-Lagrange multiplier before rescaling
    bool stagnated = false;
    /// Largest |u(x) - u(-x)| seen over the iterates.
    double max_asymmetry = 0.0;
};

/// Projected-gradient descent of K + P on {U = target_U} in the H^{alpha/2} metric,
/// followed by the rescaling to (c, a) = (1, 0) and a Newton polish there.
TravelingWave constrained_minimize(const MinimizerConfig& cfg, double alpha, double period, const RealField& seed,
                                   MinimizeTrace* trace = nullptr);

/// Sort node values descending and lay them out as x = 0, h, -h, 2h, -2h, ...
RealField symmetric_decreasing_rearrangement(const RealField& f);

struct NehariCheck {
    double lhs = 0.0;  ///< 2K + 3U + 2P
    double E = 0.0;    ///< H + P
};

NehariCheck nehari_check(const RealField& u, double alpha);

struct CoercivityReport {
    int num_samples = 0;
    int num_skipped = 0;   ///< projection failures
    int num_excluded = 0;  ///< rho below eps * 1e-3
    double min_ratio = 0.0;
    double eps = 0.0;
    std::uint64_t rng_seed = 0;
    std::string norm = "H^{alpha/2}";
    bool violation = false;
    std::vector<double> ratios;
};

/// Random perturbations of size eps (H^{alpha/2}), projected onto {P = P0, M = M0};
/// reports min (E_0(u) - E_0(u0)) / rho(u, u0)^2.
CoercivityReport coercivity_probe(const TravelingWave& w0, int num_samples, double eps, std::uint64_t rng_seed);

}  // namespace fracwave
