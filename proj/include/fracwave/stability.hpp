#pragma once

// Parameter Jacobians, the stability / linear-instability decision procedure,
// the purely-growing-mode scan over A^mu, and long-period diagnostics.

#include <optional>
#include <string>
#include <vector>

#include "fracwave/continuation.hpp"
#include "fracwave/linearization.hpp"

namespace fracwave {

/// Derivatives of momentum P and mass M along the (c, a) family at fixed period.
struct ParameterJacobian {
    double M_a = 0.0, P_a = 0.0, M_c = 0.0, P_c = 0.0;
    double fd_step = 0.0;
    double determinant = 0.0;      ///< M_a P_c - M_c P_a
    double symmetry_defect = 0.0;  ///< |M_c - P_a|
    /// Stencil points that failed to re-solve, in the order c+h, c-h, a+h, a-h, c+h/2, c-h/2, a+h/2, a-h/2.
    std::vector<bool> failure_mask;
    bool complete = true;
};

/// Central differences of re-solved waves at (c +- h, a) and (c, a +- h), Richardson-combined
/// with h/2.  h is relative to max(1, |c|).
ParameterJacobian parameter_jacobian(const TravelingWave& w, double h = 1e-4,
                                     const SolverConfig& cfg = {});

/// Same quantities from u_c = -L^{-1} dP, u_a = -L^{-1} dM by deflated solves.
ParameterJacobian parameter_jacobian_deflated(const TravelingWave& w);

/// Momentum / mass of a wave in its own model.
double momentum(const TravelingWave& w);
double mass(const TravelingWave& w);

struct IndexPrediction {
    int n_minus = 0;
    bool marginal = false;
};

/// Sign changes in 1, M_a, M_a P_c - M_c P_a; marginal when |det| <= det_tol.
IndexPrediction negative_index_predict(const ParameterJacobian& J, double det_tol = 1e-10);

/// Projected index from the full one: n_-(Pi L Pi) = n_-(L) - [M_a >= 0].
int projected_index_predict(int n_minus_full, double M_a);
/// dim ker(Pi L Pi) = dim ker L + [M_a = 0].
int projected_kernel_predict(int kernel_full, double M_a, double ma_tol);

enum class Classification { StableConstrained, StableFull, LinearlyUnstable, Inconclusive, Marginal };

std::string to_string(Classification c);
Classification classification_from_string(const std::string& s);

/// Inputs to the decision table, separated from how they were computed.
struct DecisionInputs {
    bool nondegenerate = false;          ///< kernel = span{u_x} (or trivially empty)
    bool minimizer_certified = false;    ///< variational provenance or projected positivity
    bool certificate_marginal = false;
    double determinant = 0.0;
    double det_tol = 1e-10;
    int n_minus_projected = 0;
    bool projected_marginal = false;
    double P_c = 0.0;
    double pc_tol = 1e-10;
};

struct Decision {
    Classification classification = Classification::Inconclusive;
    std::vector<std::string> criteria_fired;
};

Decision decide(const DecisionInputs& in);

struct GrowingMode {
    double mu = 0.0;
    RealField mode;  ///< real part of the kernel vector of A^mu at mu*
};

struct ScanResult {
    std::vector<double> mu;
    std::vector<cplx> e_mu;  ///< tracked eigenvalue
    std::vector<int> left_count;  ///< eigenvalues with negative real part
    bool crossing_found = false;
    std::optional<GrowingMode> growing_mode;
    double L1 = 0.0;  ///< fitted lim e_mu / mu
    double L2 = 0.0;  ///< fitted lim e_mu / mu^2
    bool aborted = false;
    double last_good_mu = 0.0;
    bool exploratory = false;  ///< alpha < 1
    std::string message;
};

/// Log-spaced grid.
std::vector<double> log_grid(double lo, double hi, int count);

/// Eigen-decomposition of A^mu on mean-zero modes |k| < N/2.
Eigen::VectorXcd amu_eigenvalues(const TravelingWave& w, double mu);

ScanResult growing_mode_scan(const TravelingWave& w, const std::vector<double>& mu_grid,
                             double fit_max_mu = 1e-1);

struct ClassifyOptions {
    bool variational_provenance = false;
    bool run_scan = true;
    std::vector<double> mu_grid;  ///< empty: log grid 1e-3..1e2
    double fd_step = 1e-4;
};

struct StabilityVerdict {
    Classification classification = Classification::Inconclusive;
    int n_minus_L = 0;
    int n_minus_projected = 0;
    int kernel_dim = 0;
    int P_c_sign = 0;
    double P_c = 0.0;
    /// P_c - P_a M_c / M_a; the mean-zero (frame-independent) counterpart of P_c.
    double P_c_constrained = 0.0;
    ParameterJacobian jacobian;
    std::vector<std::string> criteria_fired;
    std::optional<GrowingMode> growing_mode;
    double zero_tol = 0.0;
    double det_tol = 0.0;
    double certificate_min = 0.0;  ///< lowest nonzero eigenvalue on {dP, dM}^perp
    bool exploratory = false;
    std::string diagnostics;
};

StabilityVerdict classify(const TravelingWave& w, const ClassifyOptions& opts = {});

struct LimitRow {
    double period = 0.0;
    double speed = 0.0, offset = 0.0;
    double M_a = 0.0, M_c = 0.0, P_c = 0.0, determinant = 0.0;
    double identity_defect = 0.0;  ///< M_a + T - 2 M_c (c = 1)
    int n_minus_L = 0, n_minus_projected = 0;
    bool resolved = true;
    std::string flag;
};

struct LimitReport {
    std::vector<LimitRow> rows;
    double max_identity_defect = 0.0;
    bool ma_negative = true;
    bool indices_one_at_largest = true;  ///< for the two largest periods
    bool pc_positive = true;
};

LimitReport solitary_limit_report(const Branch& branch);

/// KdV (p = 1) wave at (c, a) = (1, offset) on the given period, built from the branch leaving
/// u = 0 at a = 0 followed by continuation in c and a Galilean shift.  Requires c^2 + 4a > 0
/// normal-form period above 2 pi.
TravelingWave unit_speed_wave(double alpha, double period, double offset, int num_points,
                              const SolverConfig& cfg = {});

struct CriterionCheck {
    bool holds = false;
    double margin = 0.0;
};

struct CriteriaReport {
    bool applicable = true;
    CriterionCheck kernel_translation_only;
    CriterionCheck single_negative;
    CriterionCheck pc_positive;
    std::string note;
};

CriteriaReport gss_solitary_criteria(const TravelingWave& w);

}  // namespace fracwave
