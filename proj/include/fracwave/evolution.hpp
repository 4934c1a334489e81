#pragma once

// Time stepping of the nonlinear fKdV / fRLW flows and of the linearized flow
// about a traveling wave, with invariant and orbital-distance tracking.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fracwave/random.hpp"
#include "fracwave/stability.hpp"

namespace fracwave {

struct FlowParams {
    double alpha = 2.0;
    Model model = Model::KdV;
    int power = 1;
};

struct EvolveOptions {
    int samples = 200;
    /// When set, rho and x_star are tracked against this profile.
    std::optional<RealField> reference;
    /// Sobolev index of the distance; negative means alpha / 2.
    double sobolev_s = -1.0;
};

struct EvolutionTrace {
    std::vector<double> times;
    std::vector<FunctionalValues> invariants;
    std::vector<double> orbital_distance;  ///< NaN when no reference is tracked
    std::vector<double> shift;             ///< unwrapped optimal x0
    double dt = 0.0;
    std::string scheme;
    bool blowup = false;
    bool accuracy_warning = false;
    double max_relative_drift = 0.0;  ///< over H, P, M
    std::vector<double> final_values;
};

/// KdV: u_t = Lambda^alpha u_x - (u^{p+1})_x by ETDRK4.  RLW: u_t = (1 + Lambda^alpha)^{-1} (u - u^2)_x by RK4.
EvolutionTrace evolve_nonlinear(const RealField& u0, const FlowParams& flow, double t_final, double dt,
                                const EvolveOptions& opts = {});

struct LinearizedRun {
    EvolutionTrace trace;
    std::vector<double> norms;  ///< L2 norm of v at each sample
    double growth_rate = 0.0;   ///< slope of log |v| over the final half
};

/// v_t = d/dx L v in the frame moving with the wave (KdV), or (1 + Lambda^alpha)^{-1} d/dx L v (RLW).
LinearizedRun evolve_linearized(const TravelingWave& w, const RealField& v0, double t_final, double dt,
                                int samples = 200);

/// Orthogonal projection of v off span{1, u}; removes the components that feed the
/// secular (polynomially growing) part of the linearized flow.
RealField remove_secular_components(const TravelingWave& w, const RealField& v);

struct OrbitalDistance {
    double rho = 0.0;
    double x_star = 0.0;  ///< in [0, T)
};

/// min over x0 of |u - u0(. - x0)|_{H^s}.
OrbitalDistance orbital_distance(const RealField& u, const RealField& u0, double s);

/// Gaussian field on modes 1..k_max with unit coefficients variance.
RealField random_band_limited(const Grid& grid, int k_max, RandomStream& rng);

/// Newton projection of u onto {P = P0, M = M0} along the directions {u0, 1}.
/// Returns nullopt when it does not converge.
std::optional<RealField> project_to_level_set(const RealField& u, const RealField& u0, double P0, double M0,
                                              Model model, double alpha, int max_iter = 30);

struct PerturbationSpec {
    int k_max = 0;  ///< 0 means N/4
    double amplitude = 1e-3;  ///< H^{alpha/2} norm of phi before projection
    bool constrain_PM = true;
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;  ///< counter index within the seed
    double dt = 1e-3;
    std::optional<Classification> expected;
    /// Translation perturbation u0(. - delta) - u0 instead of a random field (when nonzero).
    double translation = 0.0;
};

struct ExperimentReport {
    double initial_rho = 0.0;
    double sup_rho = 0.0;
    double sup_ratio = 0.0;
    double drift = 0.0;
    bool blowup = false;
    bool projection_failed = false;
    std::string consistency;  ///< consistent / violated / inconclusive
    EvolutionTrace trace;
};

ExperimentReport perturbation_experiment(const TravelingWave& w, const PerturbationSpec& spec, double t_final);

/// E_0 = H + c P + a M in the wave's model.
double augmented_energy(const RealField& u, const WaveParams& params);

}  // namespace fracwave
