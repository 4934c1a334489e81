#include "fracwave/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fracwave/errors.hpp"
#include "fracwave/log.hpp"

namespace fracwave {

namespace {

inline double parseval_weight(int k, int n) { return (k == 0 || 2 * k == n) ? 1.0 : 2.0; }

double potential_U(const RealField& u) { return -integrate_power(u, 3) / 3.0; }

double kinetic_plus_momentum(const RealField& u, double alpha) {
    const auto f = functionals_kdv(u, alpha);
    return f.K + f.P;
}

// <f, g> in the H^{alpha/2} metric, int f g + int Lambda^{alpha/2} f Lambda^{alpha/2} g.
double h_inner(const RealField& f, const RealField& g, double alpha) {
    const Grid& gr = f.grid();
    const DispersionSymbol sym{alpha};
    double acc = 0.0;
    for (int k = 0; k < gr.num_modes(); ++k) {
        const double w = parseval_weight(k, gr.num_points()) * (1.0 + sym(gr.wavenumber(k)));
        acc += w * (f.modes()[k] * std::conj(g.modes()[k])).real();
    }
    return gr.period() * acc;
}

// Riesz representative of dU = -u^2 in the H^{alpha/2} metric.
RealField riesz_grad_U(const RealField& u, double alpha) {
    const DispersionSymbol sym{alpha};
    return -apply_multiplier(dealiased_product(u, u), [&](double xi) { return 1.0 / (1.0 + sym(xi)); });
}

// Scalar Newton along the U gradient back to U = target.
RealField restore_constraint(RealField v, double target, double alpha) {
    for (int it = 0; it < 8; ++it) {
        const double U = potential_U(v);
        if (!(U < 0.0)) throw ConstraintViolationError("constrained_minimize: iterate left the region U < 0");
        const double gap = U - target;
        if (std::abs(gap) <= 1e-15 * std::abs(target)) break;
        const RealField g = riesz_grad_U(v, alpha);
        const double slope = h_inner(g, g, alpha);
        if (!(slope > 0.0)) break;
        v = v - (gap / slope) * g;
    }
    return v;
}

double asymmetry(const RealField& u) {
    const int n = u.grid().num_points();
    double m = 0.0;
    for (int j = 1; j < n; ++j) m = std::max(m, std::abs(u[j] - u[n - j]));
    return m;
}

}  // namespace

void MinimizerConfig::validate() const {
    if (!(target_U < 0.0)) throw InvalidParamsError("MinimizerConfig: target_U must be negative");
    if (!(step > 0.0)) throw InvalidParamsError("MinimizerConfig: step must be positive");
    if (max_iter < 1) throw InvalidParamsError("MinimizerConfig: max_iter must be >= 1");
    if (!(tol > 0.0)) throw InvalidParamsError("MinimizerConfig: tol must be positive");
}

RealField symmetric_decreasing_rearrangement(const RealField& f) {
    const int n = f.grid().num_points();
    std::vector<double> v(f.values().begin(), f.values().end());
    std::sort(v.begin(), v.end(), std::greater<>());
    std::vector<double> out(n);
    out[0] = v[0];
    int next = 1;
    for (int j = 1; j < n / 2; ++j) {
        out[j] = v[next++];
        out[n - j] = v[next++];
    }
    out[n / 2] = v[next];
    return RealField(f.grid(), out);
}

NehariCheck nehari_check(const RealField& u, double alpha) {
    const auto f = functionals_kdv(u, alpha);
    return {2.0 * f.K + 3.0 * f.U + 2.0 * f.P, f.H + f.P};
}

TravelingWave constrained_minimize(const MinimizerConfig& cfg, double alpha, double period, const RealField& seed,
                                   MinimizeTrace* trace) {
    cfg.validate();
    if (!(alpha > 0.0 && alpha <= 2.0)) throw InvalidParamsError("constrained_minimize: alpha must lie in (0, 2]");
    if (alpha <= 1.0 / 3.0)
        warn_once("minimize-embedding", "alpha <= 1/3: the compact embedding behind the minimization is unavailable");
    const Grid& g = seed.grid();
    if (std::abs(g.period() - period) > 1e-12 * period) throw GridMismatchError("constrained_minimize: seed period differs");
    const double U0 = potential_U(seed);
    if (!(U0 < 0.0)) throw InvalidParamsError("constrained_minimize: seed must have U < 0");

    MinimizeTrace local;
    MinimizeTrace& tr = trace ? *trace : local;
    tr = {};
    RealField u = seed * std::cbrt(cfg.target_U / U0);
    u = restore_constraint(u, cfg.target_U, alpha);
    double F = kinetic_plus_momentum(u, alpha);
    if (cfg.use_rearrangement) {
        const RealField r = restore_constraint(symmetric_decreasing_rearrangement(u), cfg.target_U, alpha);
        const double Fr = kinetic_plus_momentum(r, alpha);
        if (Fr <= F) u = r, F = Fr;
    }
    tr.energy.push_back(F);
    tr.max_asymmetry = asymmetry(u);

    double lambda = 0.0;
    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        // Riesz gradient of K + P is u itself.
        const RealField gU = riesz_grad_U(u, alpha);
        lambda = h_inner(u, gU, alpha) / h_inner(gU, gU, alpha);
        const RealField d = u - lambda * gU;
        if (std::sqrt(h_inner(d, d, alpha)) <= cfg.tol * std::sqrt(h_inner(u, u, alpha))) {
            tr.stagnated = true;
            break;
        }
        double s = cfg.step;
        bool accepted = false;
        while (s > 1e-10) {
            RealField trial = restore_constraint(u - s * d, cfg.target_U, alpha);
            const double Ft = kinetic_plus_momentum(trial, alpha);
            if (Ft <= F + 1e-14 * std::abs(F)) {
                u = trial, F = Ft, accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) {
            // No descent left at working precision.
            tr.stagnated = true;
            break;
        }
        tr.energy.push_back(F);
        tr.max_asymmetry = std::max(tr.max_asymmetry, asymmetry(u));
    }
    tr.iterations = it;

    // Lambda^alpha u + u = theta u^2 with theta = -lambda; theta u solves the (1, 0) profile equation.
    tr.theta = -lambda;
    RealField v = u * tr.theta;
    const cplx m1 = v.modes()[1];
    if (std::abs(m1) > 1e-12 * std::max(1.0, v.max_abs())) v = translate(v, std::arg(m1) / g.wavenumber(1));

    WaveParams params;
    params.alpha = alpha;
    params.speed = 1.0;
    params.offset = 0.0;
    params.period = period;
    auto w = newton_solve(v, params);
    if (!tr.stagnated) {
        w.converged = false;
        w.message = "projected gradient did not stagnate within max_iter";
    }
    w.branch_id = "minimizer";
    return w;
}

CoercivityReport coercivity_probe(const TravelingWave& w0, int num_samples, double eps, std::uint64_t rng_seed) {
    if (!w0.converged) throw InvalidParamsError("coercivity_probe: wave is not converged");
    if (num_samples < 1) throw InvalidParamsError("coercivity_probe: need at least one sample");
    const RealField& u0 = w0.profile;
    const Grid& g = u0.grid();
    const double s = 0.5 * w0.params.alpha;
    if (!(eps > 0.0 && eps <= 0.1 * sobolev_norm(u0, s)))
        throw InvalidParamsError("coercivity_probe: eps must lie in (0, 0.1 |u0|]");
    const auto f0 = w0.params.model == Model::KdV ? functionals_kdv(u0, w0.params.alpha, w0.params.power)
                                                  : functionals_rlw(u0, w0.params.alpha);
    const double E0 = augmented_energy(u0, w0.params);

    CoercivityReport rep;
    rep.num_samples = num_samples;
    rep.eps = eps;
    rep.rng_seed = rng_seed;
    rep.min_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < num_samples; ++i) {
        RandomStream rng(rng_seed, static_cast<std::uint64_t>(i));
        const RealField phi = random_band_limited(g, g.num_points() / 4, rng);
        const RealField u = u0 + phi * (eps / sobolev_norm(phi, s));
        const auto proj = project_to_level_set(u, u0, f0.P, f0.M, w0.params.model, w0.params.alpha);
        if (!proj) {
            ++rep.num_skipped;
            continue;
        }
        const double rho = orbital_distance(*proj, u0, s).rho;
        if (!(rho > eps * 1e-3)) {
            ++rep.num_excluded;
            continue;
        }
        const double ratio = (augmented_energy(*proj, w0.params) - E0) / (rho * rho);
        rep.ratios.push_back(ratio);
        rep.min_ratio = std::min(rep.min_ratio, ratio);
    }
    if (rep.ratios.empty()) rep.min_ratio = std::numeric_limits<double>::quiet_NaN();
    rep.violation = !rep.ratios.empty() && !(rep.min_ratio > 0.0);
    return rep;
}

}  // namespace fracwave
