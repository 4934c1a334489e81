#pragma once

// Second-variation operators  multiplier(xi) + potential(x) + shift  as dense
// symmetric matrices in a real trigonometric basis, their spectra by parity
// sector, kernel and nodal diagnostics, and the mean-zero projection.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fracwave/wave_solver.hpp"

namespace fracwave {

enum class Sector { Full, Even, Odd };

std::string to_string(Sector s);
Sector sector_from_string(const std::string& s);

struct LinearOperator {
    Grid grid;
    std::vector<double> multiplier;  ///< real symbol at half-spectrum index k
    RealField potential;
    double constant_shift = 0.0;
    bool projected = false;

    /// Matrix-free application (projected operators act as Pi L Pi).
    RealField apply(const RealField& f) const;
    bool potential_is_even(double rel_tol = 1e-10) const;
};

/// KdV: Lambda^alpha - (p+1) u^p + c.  RLW: c(1 + Lambda^alpha) + 1 - 2u.
LinearOperator build_second_variation(const TravelingWave& w);

/// Orthonormal basis functions (columns) at the nodes under the trapezoid inner product:
/// 1/sqrt(T), sqrt(2/T) cos k, Nyquist cos / sqrt(T), then sqrt(2/T) sin k.
/// Indices 0..N/2 span the even sector, N/2+1..N-1 the odd one.
const Eigen::MatrixXd& trig_basis(const Grid& grid);

/// Basis indices that make up a sector (the constant is dropped for projected operators).
std::vector<int> sector_indices(const Grid& grid, Sector sector, bool projected);

/// Dense symmetric matrix of the operator restricted to a sector.
Eigen::MatrixXd dense_matrix(const LinearOperator& op, Sector sector);

struct SpectrumReport {
    Sector sector = Sector::Full;
    std::vector<double> eigenvalues;  ///< ascending
    int n_minus = 0;
    int kernel_dim = 0;
    double zero_tol = 0.0;
    bool marginal = false;  ///< some eigenvalue within 10x of zero_tol but outside it
    std::vector<RealField> eigenfunctions;
};

/// Dense eigensolve; k_request eigenfunctions (lowest first) are returned as fields.
/// zero_tol <= 0 means 1e-8 times the spectral radius.
SpectrumReport eigen_spectrum(const LinearOperator& op, Sector sector, int k_request = 0,
                              double zero_tol = -1.0);

/// Spectrum of the operator on the orthogonal complement of the given fields (full sector).
SpectrumReport constrained_spectrum(const LinearOperator& op, const std::vector<RealField>& constraints,
                                    double zero_tol = -1.0);

struct KernelVerdict {
    bool nondegenerate = false;
    bool trivial_wave = false;  ///< u_x vanishes identically
    int kernel_dim = 0;
    double alignment = 0.0;  ///< |<v, u_x/|u_x|>| (norm of the projection of u_x on the kernel)
    double angle = 0.0;      ///< radians
};

KernelVerdict kernel_check(const LinearOperator& op, const TravelingWave& w);

/// Cyclic sign changes; tiny values take the sign of the nearest non-tiny neighbour.
int nodal_count(const RealField& v);

LinearOperator project_mean_zero(const LinearOperator& op);

struct RangeResult {
    bool in_range = false;
    RealField preimage;
    double kernel_overlap = 0.0;  ///< largest |<kernel vector, f>| / |f|
    double condition = 0.0;
    bool ill_conditioned = false;
};

/// Deflated solve of op g = f on the complement of the numerical kernel.
RangeResult range_membership(const LinearOperator& op, const RealField& f);

}  // namespace fracwave
