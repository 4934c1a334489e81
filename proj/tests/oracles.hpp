#pragma once

// Closed-form periodic waves used as independent references in the tests.
// Nothing here calls the solver.

#include <boost/math/special_functions/jacobi_elliptic.hpp>
#include <cmath>
#include <functional>

namespace oracle {

inline constexpr double pi = 3.14159265358979323846;

// u = A + B cn^2(kappa x, m) solving -u'' - u^2 + c u = 0 (a = 0) on period T,
// on the branch that leaves u = 0 at c = -(2 pi / T)^2.
struct Cnoidal {
    double m = 0.0, kappa = 0.0, A = 0.0, B = 0.0, c = 0.0;

    double operator()(double x) const {
        const double cn = boost::math::jacobi_cn(std::sqrt(m), kappa * x);
        return A + B * cn * cn;
    }
};

inline double cnoidal_height(double m, double T) {
    const double kappa = 2.0 * std::comp_ellint_1(std::sqrt(m)) / T;
    return 6.0 * kappa * kappa * m;
}

// amplitude is half the peak-to-trough height, B / 2.
inline Cnoidal cnoidal(double amplitude, double T) {
    const double B = 2.0 * amplitude;
    double lo = 1e-300, hi = 1.0 - 1e-15;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cnoidal_height(mid, T) < B ? lo : hi) = mid;
    }
    Cnoidal w;
    w.m = 0.5 * (lo + hi);
    w.kappa = 2.0 * std::comp_ellint_1(std::sqrt(w.m)) / T;
    w.B = B;
    const double k2 = w.kappa * w.kappa;
    // A^2 - 4 k2 (1 - 2m) A - 2 k2 B (1 - m) = 0, root vanishing with B
    const double h = 2.0 * k2 * (1.0 - 2.0 * w.m);
    w.A = h - std::sqrt(h * h + 2.0 * k2 * B * (1.0 - w.m));
    w.c = 2.0 * w.A - 4.0 * k2 + 8.0 * w.m * k2;
    return w;
}

// u = k sinh g / (cosh g - cos k x) solving Lambda u - u^2 + c u = 0
// with c = k coth g, k = 2 pi / T.  Half height is k / sinh g.
struct BenjaminOno {
    double k = 0.0, gamma = 0.0, c = 0.0;

    double operator()(double x) const {
        return k * std::sinh(gamma) / (std::cosh(gamma) - std::cos(k * x));
    }
};

inline BenjaminOno benjamin_ono(double amplitude, double T) {
    BenjaminOno w;
    w.k = 2.0 * pi / T;
    w.gamma = std::asinh(w.k / amplitude);
    w.c = w.k / std::tanh(w.gamma);
    return w;
}

}  // namespace oracle

namespace oracle {

// Same family parametrized by the speed c > k.
inline BenjaminOno benjamin_ono_at_speed(double c, double T) {
    BenjaminOno w;
    w.k = 2.0 * pi / T;
    w.gamma = std::atanh(w.k / c);
    w.c = c;
    return w;
}

}  // namespace oracle
