#pragma once

// Slow, direct reference computations for the unit tests.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "fracwave/spectral.hpp"

namespace ref {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

// c_k = (1/N) sum_j f_j e^{-2 pi i j k / N}, k = 0..N-1
inline std::vector<cplx> dft(const fracwave::RealField& f) {
    const int n = f.size();
    std::vector<cplx> c(n);
    for (int k = 0; k < n; ++k) {
        cplx acc = 0;
        for (int j = 0; j < n; ++j) acc += f[j] * std::polar(1.0, -2 * pi * j * k / n);
        c[k] = acc / double(n);
    }
    return c;
}

// Signed wavenumber index of DFT slot k (Nyquist taken as +N/2).
inline int signed_index(int k, int n) { return k <= n / 2 ? k : k - n; }

// Evaluate the trigonometric interpolant (no Nyquist content assumed) at x.
inline double interpolant(const std::vector<cplx>& c, double period, double x) {
    const int n = static_cast<int>(c.size());
    cplx acc = 0;
    for (int k = 0; k < n; ++k) acc += c[k] * std::polar(1.0, 2 * pi * signed_index(k, n) * x / period);
    return acc.real();
}

// Real field with independent Gaussian modes 1..kmax plus a mean.
inline fracwave::RealField random_field(const fracwave::Grid& g, int kmax, std::mt19937_64& rng, double scale = 1.0,
                                        double mean = 0.0) {
    std::normal_distribution<double> nd;
    std::vector<double> a(kmax + 1), b(kmax + 1);
    for (int k = 1; k <= kmax; ++k) {
        a[k] = nd(rng) * scale / k;
        b[k] = nd(rng) * scale / k;
    }
    return fracwave::RealField::from_function(g, [&](double x) {
        double v = mean;
        for (int k = 1; k <= kmax; ++k) {
            const double t = 2 * pi * k * x / g.period();
            v += a[k] * std::cos(t) + b[k] * std::sin(t);
        }
        return v;
    });
}

inline double max_diff(const fracwave::RealField& a, const fracwave::RealField& b) { return (a - b).max_abs(); }

}  // namespace ref
