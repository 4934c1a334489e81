#pragma once

// Periodic Fourier machinery on a uniform collocation grid: the fractional
// Laplacian, spectral differentiation, dealiased products, norms and the
// conserved functionals of the fractional KdV and RLW equations.

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "fracwave/fft.hpp"

namespace fracwave {

inline constexpr double kPi = 3.14159265358979323846;

/// Uniform periodic mesh on [0, T): node j sits at x_j = j T / N.
class Grid {
public:
    Grid(int num_points, double period);

    int num_points() const { return num_points_; }
    double period() const { return period_; }
    double spacing() const { return period_ / num_points_; }
    double node(int j) const { return j * spacing(); }
    /// Number of stored half-spectrum modes, N/2 + 1.
    int num_modes() const { return num_points_ / 2 + 1; }
    /// Wavenumber 2 pi k / T of half-spectrum index k >= 0.
    double wavenumber(int k) const { return 2.0 * kPi * k / period_; }

    bool operator==(const Grid& other) const = default;

private:
    int num_points_;
    double period_;
};

/// |xi|^alpha with the value at xi = 0 defined as 0 for every alpha.
struct DispersionSymbol {
    double alpha;
    double operator()(double xi) const;
};

/// A real T-periodic function sampled at the grid nodes.  Immutable; the
/// half-spectrum Fourier modes are computed once at construction.
class RealField {
public:
    RealField(const Grid& grid, std::vector<double> values);

    static RealField from_modes(const Grid& grid, std::span<const cplx> modes);
    static RealField from_function(const Grid& grid, const std::function<double(double)>& f);
    static RealField constant(const Grid& grid, double value);
    static RealField zero(const Grid& grid) { return constant(grid, 0.0); }

    const Grid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::span<const cplx> modes() const { return modes_; }
    double operator[](int j) const { return values_[j]; }
    int size() const { return grid_.num_points(); }

    double max_abs() const;

    RealField operator+(const RealField& other) const;
    RealField operator-(const RealField& other) const;
    RealField operator*(double s) const;
    RealField operator+(double s) const;
    RealField operator-() const { return *this * -1.0; }

private:
    RealField(const Grid& grid, std::vector<double> values, std::vector<cplx> modes);

    Grid grid_;
    std::vector<double> values_;
    std::vector<cplx> modes_;
};

inline RealField operator*(double s, const RealField& f) { return f * s; }

void require_same_grid(const RealField& f, const RealField& g);

/// Apply a real, even Fourier multiplier symbol(xi) mode by mode.
RealField apply_multiplier(const RealField& f, const std::function<double(double)>& symbol);

/// Lambda^alpha f: mode k scaled by |2 pi k / T|^alpha; the mean maps to 0.
RealField apply_fractional_laplacian(const RealField& f, double alpha);

/// Spectral derivative; the Nyquist mode is zeroed.
RealField differentiate(const RealField& f);

/// Translate: returns f(x - shift) by exact phase rotation of the modes
/// (Nyquist treated as a cosine).
RealField translate(const RealField& f, double shift);

/// Pointwise product with zero padding (3/2 rule) so quadratic aliasing vanishes.
RealField dealiased_product(const RealField& f, const RealField& g);

/// f^q computed on a padded grid large enough that q-fold aliasing vanishes,
/// then truncated back to the field's grid.
RealField dealiased_power(const RealField& f, int q);

/// Trigonometric interpolation onto a grid with a different point count (same period).
RealField resample(const RealField& f, int num_points);

/// Trapezoid quadrature of f over one period.
double integrate(const RealField& f);
/// Exact quadrature of f^q for the trigonometric interpolant of f.
double integrate_power(const RealField& f, int q);
/// L2 inner product via trapezoid quadrature.
double inner(const RealField& f, const RealField& g);
double l2_norm(const RealField& f);
double mean(const RealField& f);

/// (int u^2 + |Lambda^s u|^2)^{1/2}; the mean mode contributes only to the L2 part.
double sobolev_norm(const RealField& u, double s);

/// Largest |mode k| over the upper third of the spectrum relative to the largest mode.
double spectral_tail(const RealField& u);

struct FunctionalValues {
    double H = 0.0;  ///< Hamiltonian
    double K = 0.0;  ///< kinetic, 1/2 int |Lambda^{alpha/2} u|^2
    double U = 0.0;  ///< potential
    double P = 0.0;  ///< momentum
    double M = 0.0;  ///< mass
};

/// K = 1/2 int |Lambda^{alpha/2} u|^2, U = -1/(p+2) int u^{p+2}, H = K + U,
/// P = 1/2 int u^2, M = int u.
FunctionalValues functionals_kdv(const RealField& u, double alpha, int p = 1);

/// H = int (u^2/2 - u^3/3), P = 1/2 int (u^2 + |Lambda^{alpha/2} u|^2), M = int u.
/// K and U carry the kinetic and cubic parts for reference.
FunctionalValues functionals_rlw(const RealField& u, double alpha);

}  // namespace fracwave
