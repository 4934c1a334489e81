#include "fracwave/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>

#include "fracwave/errors.hpp"
#include "fracwave/log.hpp"

namespace fracwave {

namespace {

std::atomic<bool> g_warnings_enabled{true};

RealFft& fft_for(int n) {
    thread_local std::unordered_map<int, RealFft> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, RealFft(n)).first;
    return it->second;
}

// Weight of half-spectrum index k in Parseval sums over the full spectrum.
inline double parseval_weight(int k, int n) { return (k == 0 || 2 * k == n) ? 1.0 : 2.0; }

// Smallest multiple of 4 that is >= the requested size.
int padded_size(int n, int q) {
    int m = (q + 1) * n / 2;
    if (m < n) m = n;
    return (m + 3) / 4 * 4;
}

}  // namespace

void warn_once(const std::string& key, const std::string& message) {
    if (!g_warnings_enabled.load()) return;
    static std::mutex mutex;
    static std::set<std::string> seen;
    std::lock_guard lock(mutex);
    if (seen.insert(key).second) std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings_enabled.store(enabled); }

Grid::Grid(int num_points, double period) : num_points_(num_points), period_(period) {
    if (num_points < 8 || num_points % 2 != 0) {
        throw InvalidFieldError("Grid: num_points must be even and >= 8");
    }
    if (!(period > 0.0) || !std::isfinite(period)) {
        throw InvalidFieldError("Grid: period must be positive and finite");
    }
}

double DispersionSymbol::operator()(double xi) const {
    if (xi == 0.0) return 0.0;
    return std::pow(std::abs(xi), alpha);
}

RealField::RealField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != grid_.num_points()) {
        throw InvalidFieldError("RealField: value count does not match grid");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw InvalidFieldError("RealField: non-finite value");
    }
    fft_for(grid_.num_points()).forward(values_, modes_);
}

RealField::RealField(const Grid& grid, std::vector<double> values, std::vector<cplx> modes)
    : grid_(grid), values_(std::move(values)), modes_(std::move(modes)) {
    for (double v : values_) {
        if (!std::isfinite(v)) throw InvalidFieldError("RealField: non-finite value");
    }
}

RealField RealField::from_modes(const Grid& grid, std::span<const cplx> modes) {
    if (static_cast<int>(modes.size()) != grid.num_modes()) {
        throw InvalidFieldError("RealField::from_modes: mode count does not match grid");
    }
    std::vector<cplx> m(modes.begin(), modes.end());
    m.front().imag(0.0);
    m.back().imag(0.0);
    std::vector<double> values;
    fft_for(grid.num_points()).inverse(m, values);
    return RealField(grid, std::move(values), std::move(m));
}

RealField RealField::from_function(const Grid& grid, const std::function<double(double)>& f) {
    std::vector<double> v(grid.num_points());
    for (int j = 0; j < grid.num_points(); ++j) v[j] = f(grid.node(j));
    return RealField(grid, std::move(v));
}

RealField RealField::constant(const Grid& grid, double value) {
    return RealField(grid, std::vector<double>(grid.num_points(), value));
}

double RealField::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

void require_same_grid(const RealField& f, const RealField& g) {
    if (!(f.grid() == g.grid())) throw GridMismatchError("fields live on different grids");
}

RealField RealField::operator+(const RealField& other) const {
    require_same_grid(*this, other);
    std::vector<double> v(values_);
    std::vector<cplx> m(modes_);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += other.values_[j];
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += other.modes_[k];
    return RealField(grid_, std::move(v), std::move(m));
}

RealField RealField::operator-(const RealField& other) const {
    require_same_grid(*this, other);
    std::vector<double> v(values_);
    std::vector<cplx> m(modes_);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] -= other.values_[j];
    for (std::size_t k = 0; k < m.size(); ++k) m[k] -= other.modes_[k];
    return RealField(grid_, std::move(v), std::move(m));
}

RealField RealField::operator*(double s) const {
    std::vector<double> v(values_);
    std::vector<cplx> m(modes_);
    for (auto& x : v) x *= s;
    for (auto& x : m) x *= s;
    return RealField(grid_, std::move(v), std::move(m));
}

RealField RealField::operator+(double s) const {
    std::vector<double> v(values_);
    std::vector<cplx> m(modes_);
    for (auto& x : v) x += s;
    m[0] += s;
    return RealField(grid_, std::move(v), std::move(m));
}

RealField apply_multiplier(const RealField& f, const std::function<double(double)>& symbol) {
    const Grid& g = f.grid();
    std::vector<cplx> m(f.modes().begin(), f.modes().end());
    for (int k = 0; k < g.num_modes(); ++k) m[k] *= symbol(g.wavenumber(k));
    return RealField::from_modes(g, m);
}

RealField apply_fractional_laplacian(const RealField& f, double alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw InvalidParamsError("apply_fractional_laplacian: alpha must be >= 0");
    }
    if (alpha == 0.0 || alpha > 2.0) {
        warn_once("alpha-range", "fractional Laplacian exponent outside (0, 2]");
    }
    return apply_multiplier(f, DispersionSymbol{alpha});
}

RealField differentiate(const RealField& f) {
    const Grid& g = f.grid();
    std::vector<cplx> m(f.modes().begin(), f.modes().end());
    for (int k = 0; k < g.num_modes(); ++k) m[k] *= cplx{0.0, g.wavenumber(k)};
    m.back() = 0.0;
    return RealField::from_modes(g, m);
}

RealField translate(const RealField& f, double shift) {
    const Grid& g = f.grid();
    std::vector<cplx> m(f.modes().begin(), f.modes().end());
    const int nyq = g.num_modes() - 1;
    for (int k = 1; k < nyq; ++k) m[k] *= std::polar(1.0, -g.wavenumber(k) * shift);
    m[nyq] *= std::cos(g.wavenumber(nyq) * shift);
    return RealField::from_modes(g, m);
}

RealField resample(const RealField& f, int num_points) {
    const Grid target(num_points, f.grid().period());
    auto m = resize_spectrum(f.modes(), f.grid().num_points(), num_points);
    return RealField::from_modes(target, m);
}

RealField dealiased_product(const RealField& f, const RealField& g) {
    require_same_grid(f, g);
    const int n = f.grid().num_points();
    const int m = padded_size(n, 2);
    RealFft& big = fft_for(m);
    std::vector<double> a, b;
    big.inverse(resize_spectrum(f.modes(), n, m), a);
    big.inverse(resize_spectrum(g.modes(), n, m), b);
    for (int j = 0; j < m; ++j) a[j] *= b[j];
    auto prod = big.forward(a);
    return RealField::from_modes(f.grid(), resize_spectrum(prod, m, n));
}

RealField dealiased_power(const RealField& f, int q) {
    if (q < 1) throw InvalidParamsError("dealiased_power: q must be >= 1");
    if (q == 1) return f;
    const int n = f.grid().num_points();
    const int m = padded_size(n, q);
    RealFft& big = fft_for(m);
    std::vector<double> a;
    big.inverse(resize_spectrum(f.modes(), n, m), a);
    for (double& x : a) x = std::pow(x, q);
    auto prod = big.forward(a);
    return RealField::from_modes(f.grid(), resize_spectrum(prod, m, n));
}

double integrate(const RealField& f) { return f.grid().period() * f.modes()[0].real(); }

double integrate_power(const RealField& f, int q) {
    if (q < 1) throw InvalidParamsError("integrate_power: q must be >= 1");
    if (q == 1) return integrate(f);
    const int n = f.grid().num_points();
    const int m = padded_size(n, q);
    std::vector<double> a;
    fft_for(m).inverse(resize_spectrum(f.modes(), n, m), a);
    double s = 0.0;
    for (double x : a) s += std::pow(x, q);
    return s * f.grid().period() / m;
}

double inner(const RealField& f, const RealField& g) {
    require_same_grid(f, g);
    double s = 0.0;
    for (int j = 0; j < f.size(); ++j) s += f[j] * g[j];
    return s * f.grid().spacing();
}

double l2_norm(const RealField& f) { return std::sqrt(inner(f, f)); }

double mean(const RealField& f) { return f.modes()[0].real(); }

double sobolev_norm(const RealField& u, double s) {
    if (!(s >= 0.0)) throw InvalidParamsError("sobolev_norm: s must be >= 0");
    const Grid& g = u.grid();
    const int n = g.num_points();
    double acc = 0.0;
    for (int k = 0; k < g.num_modes(); ++k) {
        const double w = (k == 0) ? 1.0 : 1.0 + std::pow(g.wavenumber(k), 2.0 * s);
        acc += parseval_weight(k, n) * w * std::norm(u.modes()[k]);
    }
    return std::sqrt(g.period() * acc);
}

double spectral_tail(const RealField& u) {
    const auto m = u.modes();
    double peak = 0.0;
    for (const auto& c : m) peak = std::max(peak, std::abs(c));
    if (peak == 0.0) return 0.0;
    double tail = 0.0;
    const int start = 2 * static_cast<int>(m.size()) / 3;
    for (int k = start; k < static_cast<int>(m.size()); ++k) tail = std::max(tail, std::abs(m[k]));
    return tail / peak;
}

namespace {

double kinetic(const RealField& u, double alpha) {
    const Grid& g = u.grid();
    const DispersionSymbol sym{alpha};
    double acc = 0.0;
    for (int k = 1; k < g.num_modes(); ++k) {
        acc += parseval_weight(k, g.num_points()) * sym(g.wavenumber(k)) * std::norm(u.modes()[k]);
    }
    return 0.5 * g.period() * acc;
}

double half_l2_squared(const RealField& u) {
    const Grid& g = u.grid();
    double acc = 0.0;
    for (int k = 0; k < g.num_modes(); ++k) {
        acc += parseval_weight(k, g.num_points()) * std::norm(u.modes()[k]);
    }
    return 0.5 * g.period() * acc;
}

}  // namespace

FunctionalValues functionals_kdv(const RealField& u, double alpha, int p) {
    if (p < 1) throw InvalidParamsError("functionals_kdv: p must be >= 1");
    FunctionalValues f;
    f.K = kinetic(u, alpha);
    f.U = -integrate_power(u, p + 2) / (p + 2);
    f.H = f.K + f.U;
    f.P = half_l2_squared(u);
    f.M = integrate(u);
    return f;
}

FunctionalValues functionals_rlw(const RealField& u, double alpha) {
    FunctionalValues f;
    f.K = kinetic(u, alpha);
    f.U = -integrate_power(u, 3) / 3.0;
    const double half_sq = half_l2_squared(u);
    f.H = half_sq + f.U;
    f.P = half_sq + f.K;
    f.M = integrate(u);
    return f;
}

}  // namespace fracwave
