#pragma once

// Traveling-wave profiles of the fractional KdV and RLW equations by Newton
// iteration on even Fourier collocation, plus the Galilean/scaling normal
// forms and the RLW -> KdV reduction.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracwave/spectral.hpp"

namespace fracwave {

enum class Model { KdV, RLW };

std::string to_string(Model m);
Model model_from_string(const std::string& s);

struct WaveParams {
    double alpha = 2.0;
    double speed = 1.0;   ///< c
    double offset = 0.0;  ///< a
    double period = 2.0 * kPi;
    int power = 1;        ///< p
    Model model = Model::KdV;

    /// Throws InvalidParamsError / UnsupportedModelError when the bundle is unusable.
    void validate() const;
};

/// Largest admissible power for alpha < 1: p < 2 alpha / (1 - alpha).  Infinite for alpha >= 1.
double max_power(double alpha);

struct SolverConfig {
    double tol = 1e-12;
    int max_iter = 50;
    /// Reciprocal condition estimate below which the even-sector Jacobian counts as singular.
    double singular_rcond = 1e-13;
};

struct TravelingWave {
    RealField profile;
    WaveParams params;
    double residual_norm = 0.0;
    std::string branch_id;
    bool converged = false;
    int iterations = 0;
    bool resolved = true;  ///< spectral tail below 1e-12
    std::string message;
};

/// KdV: Lambda^alpha u - u^{p+1} + c u + a.  RLW: c(1 + Lambda^alpha) u + u - u^2 + a.
RealField residual(const RealField& u, const WaveParams& params);

/// Newton solve at fixed (c, a).  The iterate lives in the even cosine sector.
TravelingWave newton_solve(const RealField& seed, const WaveParams& params,
                           const SolverConfig& cfg = {});

enum class FreeParameter { Speed, Offset };

/// Linear side condition  <weights, b> + param_weight * theta = target  on the cosine
/// coefficients b (u = sum_k b_k cos(2 pi k x / T)) and the free parameter theta.
struct LinearConstraint {
    std::vector<double> weights;
    double param_weight = 0.0;
    double target = 0.0;
};

/// Newton solve with one of (c, a) free and one extra linear equation.
TravelingWave newton_solve_constrained(const RealField& seed, const WaveParams& params,
                                       FreeParameter free, const LinearConstraint& constraint,
                                       const SolverConfig& cfg = {});

/// Cosine coefficients of du/d(theta) along the family of solutions at fixed other
/// parameter, from the even-sector linearization: J db = -dr/dtheta.
std::vector<double> parameter_derivative(const TravelingWave& w, FreeParameter free,
                                         const SolverConfig& cfg = {});

/// Half peak-to-trough height (u(0) - u(T/2)) / 2.
double wave_amplitude(const RealField& u);

/// Solve with the amplitude pinned and `free` adjusted.
TravelingWave solve_at_amplitude(const RealField& seed, const WaveParams& params, double amplitude,
                                 FreeParameter free = FreeParameter::Speed,
                                 const SolverConfig& cfg = {});

/// Cosine coefficients b_k, k = 0..N/2, of the even part of u.
std::vector<double> cosine_coefficients(const RealField& u);
RealField from_cosine_coefficients(const Grid& grid, const std::vector<double>& b);

struct Seed {
    RealField field;
    WaveParams params;
};

/// Small-amplitude seed eps cos(2 pi k x / T) for the KdV (p = 1) branch leaving u = 0.
/// Speed c = -(2 pi k / T)^alpha - eps * kappa.  Without kappa the second-order
/// Lyapunov-Schmidt correction is used so that a = 0 is reachable by Newton.
Seed bifurcation_seed(int k, double period, double alpha, double eps, int num_points,
                      std::optional<double> kappa = std::nullopt);

/// Wave on the branch leaving u = 0 at mode k with the given amplitude (a = 0, c free).
TravelingWave small_amplitude_wave(int k, double period, double alpha, double amplitude,
                                   int num_points, const SolverConfig& cfg = {});

/// Speed correction coefficient c2 with c = -(2 pi k/T)^alpha + c2 eps^2 + O(eps^4).
double bifurcation_speed_correction(int k, double period, double alpha);

struct TransformRecord {
    double shift = 0.0;  ///< Galilean shift added to u
    double gamma = 1.0;  ///< sqrt(c^2 + 4a)
    WaveParams original;
};

/// Map a KdV (p = 1) wave to the (c, a) = (1, 0) normal form on period gamma^{1/alpha} T.
std::pair<TravelingWave, TransformRecord> canonical_normalize(const TravelingWave& w);
TravelingWave inverse_normalize(const TravelingWave& w, const TransformRecord& record);

/// Galilean map u -> u + s, (c, a) -> (c + 2s, a - c s - s^2).
TravelingWave galilean_shift(const TravelingWave& w, double s);

/// KdV scaling u -> lambda^alpha u(lambda x): (c, a) -> (lambda^alpha c, lambda^{2 alpha} a),
/// period T / lambda.  Node values keep their order.
TravelingWave scale_wave(const TravelingWave& w, double lambda);

/// RLW wave at speed c -> KdV profile w(y) = 2/(c+1) u(mu y), mu^alpha = 2c/(c+1),
/// with c_K = 2 and a_K = 4a/(c+1)^2.
TravelingWave rlw_to_kdv_reduction(const TravelingWave& w);

struct IdentityResiduals {
    double r1 = 0.0;  ///< |int u^{p+1} - c M - a T|
    double r2 = 0.0;  ///< |2K + (p+2) U + 2c P + a M|
};

IdentityResiduals integral_identity_residuals(const TravelingWave& w);

/// Constant solutions of -u^{p+1} + c u + a = 0 (KdV) or (c + 1) u - u^2 + a = 0 (RLW).
std::vector<double> constant_solutions(const WaveParams& params);

/// Wrap a profile in a TravelingWave, recomputing its residual.
TravelingWave make_wave(const RealField& u, const WaveParams& params, double tol = 1e-12);

}  // namespace fracwave
