#include "fracwave/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "fracwave/errors.hpp"
#include "fracwave/fft.hpp"
#include "fracwave/log.hpp"

namespace fracwave {

namespace {

using Modes = std::vector<cplx>;
using RhsFn = std::function<void(const Modes&, Modes&)>;

constexpr double kBlowup = 1e6;
constexpr double kDriftWarn = 1e-4;
constexpr double kBoundedRatio = 50.0;

inline double parseval_weight(int k, int n) { return (k == 0 || 2 * k == n) ? 1.0 : 2.0; }

int padded_points(int n, int q) {
    int m = (q + 1) * n / 2;
    if (m < n) m = n;
    return (m + 3) / 4 * 4;
}

// Products and powers on a zero-padded grid, truncated back to n points.
class Dealiaser {
public:
    Dealiaser(int n, int q) : n_(n), m_(padded_points(n, q)), small_(n), big_(m_) {}

    void power(const Modes& a, int q, Modes& out) {
        big_.inverse(resize_spectrum(a, n_, m_), va_);
        for (double& v : va_) v = std::pow(v, q);
        big_.forward(va_, tmp_);
        out = resize_spectrum(tmp_, m_, n_);
    }

    // g is given by its padded-grid values.
    void product(const std::vector<double>& g_padded, const Modes& a, Modes& out) {
        big_.inverse(resize_spectrum(a, n_, m_), va_);
        for (std::size_t j = 0; j < va_.size(); ++j) va_[j] *= g_padded[j];
        big_.forward(va_, tmp_);
        out = resize_spectrum(tmp_, m_, n_);
    }

    std::vector<double> padded_values(const Modes& a) {
        std::vector<double> v;
        big_.inverse(resize_spectrum(a, n_, m_), v);
        return v;
    }

    RealFft& small() { return small_; }

private:
    int n_, m_;
    RealFft small_, big_;
    std::vector<double> va_;
    Modes tmp_;
};

struct Etdrk4 {
    Modes E, E2, Q, f1, f2, f3;

    Etdrk4(const Modes& lambda, double dt) {
        const std::size_t h = lambda.size();
        E.resize(h), E2.resize(h), Q.resize(h), f1.resize(h), f2.resize(h), f3.resize(h);
        constexpr int kContour = 32;
        for (std::size_t k = 0; k < h; ++k) {
            const cplx L = lambda[k] * dt;
            E[k] = std::exp(L);
            E2[k] = std::exp(L / 2.0);
            cplx q = 0, a = 0, b = 0, c = 0;
            for (int j = 0; j < kContour; ++j) {
                const cplx r = L + std::polar(1.0, kPi * (j + 0.5) * 2.0 / kContour);
                const cplx er = std::exp(r), r3 = r * r * r;
                q += (std::exp(r / 2.0) - 1.0) / r;
                a += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3;
                b += (2.0 + r + er * (r - 2.0)) / r3;
                c += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3;
            }
            Q[k] = dt * q / double(kContour);
            f1[k] = dt * a / double(kContour);
            f2[k] = dt * b / double(kContour);
            f3[k] = dt * c / double(kContour);
        }
    }

    void step(Modes& u, const RhsFn& N) {
        const std::size_t h = u.size();
        N(u, nu_);
        a_.resize(h), b_.resize(h), c_.resize(h);
        for (std::size_t k = 0; k < h; ++k) a_[k] = E2[k] * u[k] + Q[k] * nu_[k];
        N(a_, na_);
        for (std::size_t k = 0; k < h; ++k) b_[k] = E2[k] * u[k] + Q[k] * na_[k];
        N(b_, nb_);
        for (std::size_t k = 0; k < h; ++k) c_[k] = E2[k] * a_[k] + Q[k] * (2.0 * nb_[k] - nu_[k]);
        N(c_, nc_);
        for (std::size_t k = 0; k < h; ++k)
            u[k] = E[k] * u[k] + f1[k] * nu_[k] + 2.0 * f2[k] * (na_[k] + nb_[k]) + f3[k] * nc_[k];
    }

private:
    Modes nu_, na_, nb_, nc_, a_, b_, c_;
};

// Classical RK4 on the full right-hand side.
struct Rk4 {
    double dt = 0.0;
    void step(Modes& u, const RhsFn& f) {
        const std::size_t h = u.size();
        f(u, k1_);
        tmp_.resize(h);
        for (std::size_t k = 0; k < h; ++k) tmp_[k] = u[k] + 0.5 * dt * k1_[k];
        f(tmp_, k2_);
        for (std::size_t k = 0; k < h; ++k) tmp_[k] = u[k] + 0.5 * dt * k2_[k];
        f(tmp_, k3_);
        for (std::size_t k = 0; k < h; ++k) tmp_[k] = u[k] + dt * k3_[k];
        f(tmp_, k4_);
        for (std::size_t k = 0; k < h; ++k) u[k] += dt / 6.0 * (k1_[k] + 2.0 * k2_[k] + 2.0 * k3_[k] + k4_[k]);
    }

private:
    Modes k1_, k2_, k3_, k4_, tmp_;
};

std::vector<double> wavenumbers(const Grid& g) {
    std::vector<double> xi(g.num_modes());
    for (int k = 0; k < g.num_modes(); ++k) xi[k] = (k == g.num_modes() - 1) ? 0.0 : g.wavenumber(k);
    return xi;  // Nyquist treated as having no odd derivative
}

FunctionalValues functionals_of(const RealField& u, const FlowParams& flow) {
    return flow.model == Model::KdV ? functionals_kdv(u, flow.alpha, flow.power) : functionals_rlw(u, flow.alpha);
}

double relative_change(double now, double start, double scale) {
    return std::abs(now - start) / std::max(std::abs(start), scale);
}

struct StepSchedule {
    long steps = 1;
    double dt = 0.0;
    std::vector<long> sample_steps;
};

StepSchedule schedule(double t_final, double dt, int samples) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParamsError("evolve: dt must be positive");
    if (!(t_final > 0.0) || !std::isfinite(t_final)) throw InvalidParamsError("evolve: t_final must be positive");
    if (samples < 1) throw InvalidParamsError("evolve: need at least one sample");
    StepSchedule s;
    s.steps = std::max(1L, std::lround(t_final / dt));
    s.dt = t_final / s.steps;
    for (int i = 0; i <= samples; ++i) {
        const long st = std::lround(static_cast<double>(i) * s.steps / samples);
        if (s.sample_steps.empty() || st > s.sample_steps.back()) s.sample_steps.push_back(st);
    }
    return s;
}

bool finite_and_bounded(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x) || std::abs(x) > kBlowup) return false;
    }
    return true;
}

// Runs the stepper and records samples through the callback.  Returns false on blowup.
bool march(Modes& m, const Grid& g, const StepSchedule& sch, const std::function<void(Modes&)>& one_step,
           const std::function<void(double, const RealField&)>& record) {
    RealFft fft(g.num_points());
    std::vector<double> vals;
    long done = 0;
    for (long target : sch.sample_steps) {
        while (done < target) {
            one_step(m);
            ++done;
        }
        fft.inverse(m, vals);
        if (!finite_and_bounded(vals)) return false;
        record(done * sch.dt, RealField(g, vals));
    }
    return true;
}

}  // namespace

RealField remove_secular_components(const TravelingWave& w, const RealField& v) {
    const Grid& g = w.profile.grid();
    const RealField one = RealField::constant(g, 1.0 / std::sqrt(g.period()));
    RealField e2 = w.profile - inner(w.profile, one) * one;
    const double n2 = l2_norm(e2);
    RealField out = v - inner(v, one) * one;
    if (n2 > 1e-14 * std::max(1.0, l2_norm(w.profile))) {
        e2 = e2 * (1.0 / n2);
        out = out - inner(out, e2) * e2;
    }
    return out;
}

OrbitalDistance orbital_distance(const RealField& u, const RealField& u0, double s) {
    const Grid& g = u.grid();
    if (g.num_points() != u0.grid().num_points() || g.period() != u0.grid().period())
        throw GridMismatchError("orbital_distance: grids differ");
    if (!(s >= 0.0)) throw InvalidParamsError("orbital_distance: s must be >= 0");
    const int n = g.num_points(), h = g.num_modes();
    const double T = g.period();
    std::vector<double> wt(h), xi(h);
    Modes z(h);
    for (int k = 0; k < h; ++k) {
        xi[k] = g.wavenumber(k);
        wt[k] = parseval_weight(k, n) * (k == 0 ? 1.0 : 1.0 + std::pow(xi[k], 2.0 * s));
        z[k] = u.modes()[k] * std::conj(u0.modes()[k]);
    }
    // C(x) = <u, u0(. - x)>_{H^s}
    auto corr = [&](double x, int deriv) {
        double acc = 0.0;
        for (int k = 0; k < h; ++k) {
            const cplx e = z[k] * std::polar(1.0, xi[k] * x);
            const cplx d = deriv == 0 ? e : (deriv == 1 ? cplx(0, xi[k]) * e : -xi[k] * xi[k] * e);
            acc += wt[k] * d.real();
        }
        return T * acc;
    };
    // Coarse search on the nodes by one inverse transform.
    Modes zw(h);
    for (int k = 0; k < h; ++k) zw[k] = z[k] * (k == 0 ? 1.0 : 1.0 + std::pow(xi[k], 2.0 * s));
    zw[0] = zw[0].real();
    zw[h - 1] = zw[h - 1].real();
    std::vector<double> c(n);
    RealFft(n).inverse(zw, c);
    const int j0 = static_cast<int>(std::max_element(c.begin(), c.end()) - c.begin());
    const double hx = g.spacing();
    double lo = (j0 - 1) * hx, hi = (j0 + 1) * hx;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = corr(x1, 0), f2 = corr(x2, 0);
    while (hi - lo > 1e-10) {
        if (f1 > f2) {
            hi = x2, x2 = x1, f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = corr(x1, 0);
        } else {
            lo = x1, x1 = x2, f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = corr(x2, 0);
        }
    }
    double x = 0.5 * (lo + hi);
    // The golden search only resolves x to about sqrt(eps); polish on C'(x) = 0.
    for (int it = 0; it < 3; ++it) {
        const double d2 = corr(x, 2);
        if (!(d2 < 0.0)) break;
        const double xn = x - corr(x, 1) / d2;
        if (std::abs(xn - x) > 2.0 * hx) break;
        x = xn;
    }
    double acc = 0.0;
    for (int k = 0; k < h; ++k) {
        const cplx shifted = (k == h - 1) ? u0.modes()[k] * std::cos(xi[k] * x)
                                          : u0.modes()[k] * std::polar(1.0, -xi[k] * x);
        acc += wt[k] * std::norm(u.modes()[k] - shifted);
    }
    OrbitalDistance r;
    r.rho = std::sqrt(T * acc);
    r.x_star = x - T * std::floor(x / T);
    if (r.x_star >= T) r.x_star -= T;
    return r;
}

EvolutionTrace evolve_nonlinear(const RealField& u0, const FlowParams& flow, double t_final, double dt,
                                const EvolveOptions& opts) {
    if (!(flow.alpha > 0.0 && flow.alpha <= 2.0)) throw InvalidParamsError("evolve: alpha must lie in (0, 2]");
    if (flow.power < 1) throw InvalidParamsError("evolve: power must be >= 1");
    if (flow.model == Model::RLW && flow.power != 1) throw UnsupportedModelError("RLW flow requires p = 1");
    if (opts.reference && opts.reference->grid().num_points() != u0.grid().num_points())
        throw GridMismatchError("evolve: reference on a different grid");
    if (spectral_tail(u0) > 1e-10) warn_once("evolve-resolution", "initial data is not resolved (spectral tail above 1e-10)");

    const Grid& g = u0.grid();
    const int n = g.num_points(), h = g.num_modes();
    const StepSchedule sch = schedule(t_final, dt, opts.samples);
    const auto xi = wavenumbers(g);
    const DispersionSymbol sym{flow.alpha};
    const double s = opts.sobolev_s < 0.0 ? 0.5 * flow.alpha : opts.sobolev_s;
    const int q = flow.model == Model::KdV ? flow.power + 1 : 2;
    Dealiaser dl(n, q);
    Modes m(u0.modes().begin(), u0.modes().end());
    Modes pw;

    EvolutionTrace tr;
    tr.dt = sch.dt;
    std::function<void(Modes&)> one_step;
    std::optional<Etdrk4> etd;
    Rk4 rk;
    rk.dt = sch.dt;
    RhsFn rhs;
    if (flow.model == Model::KdV) {
        tr.scheme = "etdrk4";
        Modes lambda(h);
        for (int k = 0; k < h; ++k) lambda[k] = cplx(0.0, xi[k] * sym(xi[k]));
        etd.emplace(lambda, sch.dt);
        rhs = [&](const Modes& a, Modes& out) {
            dl.power(a, q, pw);
            out.resize(h);
            for (int k = 0; k < h; ++k) out[k] = cplx(0.0, -xi[k]) * pw[k];
        };
        one_step = [&](Modes& a) { etd->step(a, rhs); };
    } else {
        tr.scheme = "rk4";
        rhs = [&](const Modes& a, Modes& out) {
            dl.power(a, 2, pw);
            out.resize(h);
            for (int k = 0; k < h; ++k) out[k] = cplx(0.0, xi[k] / (1.0 + sym(xi[k]))) * (a[k] - pw[k]);
        };
        one_step = [&](Modes& a) { rk.step(a, rhs); };
    }

    double prev_shift = 0.0;
    auto record = [&](double t, const RealField& u) {
        tr.times.push_back(t);
        tr.invariants.push_back(functionals_of(u, flow));
        if (opts.reference) {
            const auto od = orbital_distance(u, *opts.reference, s);
            double x = od.x_star;
            x += g.period() * std::round((prev_shift - x) / g.period());
            prev_shift = x;
            tr.orbital_distance.push_back(od.rho);
            tr.shift.push_back(x);
        } else {
            tr.orbital_distance.push_back(std::numeric_limits<double>::quiet_NaN());
            tr.shift.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    };
    tr.blowup = !march(m, g, sch, one_step, record);
    std::vector<double> vals;
    dl.small().inverse(m, vals);
    tr.final_values = vals;

    if (!tr.invariants.empty()) {
        const auto& f0 = tr.invariants.front();
        const double energy_scale = std::max(2.0 * f0.P, 1e-300);
        const double mass_scale = std::max(std::sqrt(2.0 * f0.P * g.period()), 1e-300);
        for (const auto& f : tr.invariants) {
            tr.max_relative_drift = std::max({tr.max_relative_drift, relative_change(f.H, f0.H, energy_scale),
                                              relative_change(f.P, f0.P, energy_scale),
                                              relative_change(f.M, f0.M, mass_scale)});
        }
    }
    if (tr.max_relative_drift > kDriftWarn) {
        tr.accuracy_warning = true;
        warn_once("evolve-drift", "invariant drift above 1e-4 relative; reduce dt or refine the grid");
    }
    return tr;
}

LinearizedRun evolve_linearized(const TravelingWave& w, const RealField& v0, double t_final, double dt,
                                int samples) {
    const Grid& g = w.profile.grid();
    if (v0.grid().num_points() != g.num_points()) throw GridMismatchError("evolve_linearized: grids differ");
    const int n = g.num_points(), h = g.num_modes();
    const WaveParams& p = w.params;
    const StepSchedule sch = schedule(t_final, dt, samples);
    const auto xi = wavenumbers(g);
    const DispersionSymbol sym{p.alpha};
    Dealiaser dl(n, 2);
    Modes um(w.profile.modes().begin(), w.profile.modes().end());
    std::vector<double> gpad;
    if (p.model == Model::KdV) {
        Modes up;
        if (p.power == 1) {
            up = um;
        } else {
            Dealiaser d2(n, p.power);
            d2.power(um, p.power, up);
        }
        gpad = dl.padded_values(up);
        for (double& v : gpad) v *= p.power + 1;
    } else {
        gpad = dl.padded_values(um);
        for (double& v : gpad) v *= 2.0;
    }
    Modes gv;
    Modes m(v0.modes().begin(), v0.modes().end());

    LinearizedRun run;
    run.trace.dt = sch.dt;
    std::function<void(Modes&)> one_step;
    std::optional<Etdrk4> etd;
    Rk4 rk;
    rk.dt = sch.dt;
    RhsFn rhs;
    if (p.model == Model::KdV) {
        run.trace.scheme = "etdrk4";
        Modes lambda(h);
        for (int k = 0; k < h; ++k) lambda[k] = cplx(0.0, xi[k] * (sym(xi[k]) + p.speed));
        etd.emplace(lambda, sch.dt);
        rhs = [&](const Modes& a, Modes& out) {
            dl.product(gpad, a, gv);
            out.resize(h);
            for (int k = 0; k < h; ++k) out[k] = cplx(0.0, -xi[k]) * gv[k];
        };
        one_step = [&](Modes& a) { etd->step(a, rhs); };
    } else {
        run.trace.scheme = "rk4";
        rhs = [&](const Modes& a, Modes& out) {
            dl.product(gpad, a, gv);
            out.resize(h);
            for (int k = 0; k < h; ++k) {
                const double s = sym(xi[k]);
                out[k] = cplx(0.0, xi[k]) * (p.speed * a[k] + (a[k] - gv[k]) / (1.0 + s));
            }
        };
        one_step = [&](Modes& a) { rk.step(a, rhs); };
    }
    const FlowParams flow{p.alpha, p.model, p.power};
    auto record = [&](double t, const RealField& v) {
        run.trace.times.push_back(t);
        run.trace.invariants.push_back(functionals_of(v, flow));
        run.trace.orbital_distance.push_back(std::numeric_limits<double>::quiet_NaN());
        run.trace.shift.push_back(std::numeric_limits<double>::quiet_NaN());
        run.norms.push_back(l2_norm(v));
    };
    run.trace.blowup = !march(m, g, sch, one_step, record);
    std::vector<double> vals;
    dl.small().inverse(m, vals);
    run.trace.final_values = vals;

    // Least-squares slope of log|v| over the second half of the run.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    const double t_end = run.trace.times.empty() ? 0.0 : run.trace.times.back();
    for (std::size_t i = 0; i < run.norms.size(); ++i) {
        if (run.trace.times[i] < 0.5 * t_end || !(run.norms[i] > 0.0)) continue;
        const double x = run.trace.times[i], y = std::log(run.norms[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
        ++cnt;
    }
    if (cnt >= 2) {
        const double den = cnt * sxx - sx * sx;
        if (den > 0.0) run.growth_rate = (cnt * sxy - sx * sy) / den;
    }
    return run;
}

RealField random_band_limited(const Grid& grid, int k_max, RandomStream& rng) {
    const int h = grid.num_modes();
    k_max = std::clamp(k_max, 1, h - 2);
    Modes m(h, cplx(0.0));
    for (int k = 1; k <= k_max; ++k) {
        const double re = rng.normal(), im = rng.normal();
        m[k] = cplx(re, im);
    }
    return RealField::from_modes(grid, m);
}

std::optional<RealField> project_to_level_set(const RealField& u, const RealField& u0, double P0, double M0,
                                              Model model, double alpha, int max_iter) {
    const Grid& g = u.grid();
    const RealField one = RealField::constant(g, 1.0);
    auto momentum_of = [&](const RealField& v) {
        return model == Model::KdV ? functionals_kdv(v, alpha).P : functionals_rlw(v, alpha).P;
    };
    auto grad_P = [&](const RealField& v) {
        return model == Model::KdV ? v : v + apply_fractional_laplacian(v, alpha);
    };
    const double scale = std::abs(P0) + std::abs(M0) + 1e-300;
    RealField v = u;
    double s1 = 0.0, s2 = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const double G1 = momentum_of(v) - P0, G2 = integrate(v) - M0;
        if (std::abs(G1) + std::abs(G2) <= 1e-14 * scale) return v;
        const RealField dP = grad_P(v);
        const double j11 = inner(dP, u0), j12 = integrate(dP), j21 = integrate(u0), j22 = g.period();
        const double det = j11 * j22 - j12 * j21;
        if (!(std::abs(det) > 1e-300)) return std::nullopt;
        const double d1 = (G1 * j22 - j12 * G2) / det, d2 = (j11 * G2 - j21 * G1) / det;
        s1 -= d1, s2 -= d2;
        v = u + s1 * u0 + s2;
        if (!std::isfinite(s1) || !std::isfinite(s2)) return std::nullopt;
    }
    const double G1 = momentum_of(v) - P0, G2 = integrate(v) - M0;
    if (std::abs(G1) + std::abs(G2) <= 1e-12 * scale) return v;
    return std::nullopt;
}

double augmented_energy(const RealField& u, const WaveParams& params) {
    const auto f = params.model == Model::KdV ? functionals_kdv(u, params.alpha, params.power)
                                              : functionals_rlw(u, params.alpha);
    return f.H + params.speed * f.P + params.offset * f.M;
}

ExperimentReport perturbation_experiment(const TravelingWave& w, const PerturbationSpec& spec, double t_final) {
    const RealField& u0 = w.profile;
    const Grid& g = u0.grid();
    const double s = 0.5 * w.params.alpha;
    const double base = sobolev_norm(u0, s);
    if (spec.translation == 0.0 && !(spec.amplitude > 0.0 && spec.amplitude <= 0.1 * base))
        throw InvalidParamsError("perturbation_experiment: amplitude must lie in (0, 0.1 |u0|]");
    ExperimentReport rep;
    RealField u = u0;
    if (spec.translation != 0.0) {
        u = translate(u0, spec.translation);
    } else {
        RandomStream rng(spec.seed, spec.stream);
        const RealField phi = random_band_limited(g, spec.k_max > 0 ? spec.k_max : g.num_points() / 4, rng);
        u = u0 + phi * (spec.amplitude / sobolev_norm(phi, s));
    }
    if (spec.constrain_PM) {
        const auto f0 = w.params.model == Model::KdV ? functionals_kdv(u0, w.params.alpha, w.params.power)
                                                     : functionals_rlw(u0, w.params.alpha);
        auto proj = project_to_level_set(u, u0, f0.P, f0.M, w.params.model, w.params.alpha);
        if (!proj) {
            rep.projection_failed = true;
            rep.consistency = "inconclusive";
            return rep;
        }
        u = *proj;
    }
    rep.initial_rho = orbital_distance(u, u0, s).rho;
    EvolveOptions eo;
    eo.reference = u0;
    eo.sobolev_s = s;
    rep.trace = evolve_nonlinear(u, {w.params.alpha, w.params.model, w.params.power}, t_final, spec.dt, eo);
    rep.blowup = rep.trace.blowup;
    rep.drift = rep.trace.max_relative_drift;
    for (double r : rep.trace.orbital_distance) rep.sup_rho = std::max(rep.sup_rho, r);
    const double denom = rep.initial_rho > 0.0 ? rep.initial_rho : 1e-300;
    rep.sup_ratio = rep.sup_rho / denom;

    const bool bounded = !rep.blowup && rep.sup_ratio <= kBoundedRatio;
    rep.consistency = "inconclusive";
    if (spec.expected) {
        const auto c = *spec.expected;
        const bool stable = c == Classification::StableFull || (c == Classification::StableConstrained && spec.constrain_PM);
        if (stable) rep.consistency = bounded ? "consistent" : "violated";
        else if (c == Classification::LinearlyUnstable && !bounded) rep.consistency = "consistent";
    }
    return rep;
}

}  // namespace fracwave
