#include "fracwave/wave_solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "fracwave/errors.hpp"
#include "fracwave/log.hpp"

namespace fracwave {

std::string to_string(Model m) { return m == Model::KdV ? "kdv" : "rlw"; }

Model model_from_string(const std::string& s) {
    if (s == "kdv" || s == "KdV") return Model::KdV;
    if (s == "rlw" || s == "RLW") return Model::RLW;
    throw UnsupportedModelError("unknown model '" + s + "'");
}

double max_power(double alpha) {
    if (alpha >= 1.0) return std::numeric_limits<double>::infinity();
    return 2.0 * alpha / (1.0 - alpha);
}

void WaveParams::validate() const {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw InvalidParamsError("alpha must lie in (0, 2]");
    if (!(period > 0.0) || !std::isfinite(period)) throw InvalidParamsError("period must be positive");
    if (!std::isfinite(speed) || !std::isfinite(offset)) throw InvalidParamsError("non-finite speed/offset");
    if (power < 1) throw InvalidParamsError("power must be >= 1");
    if (model == Model::RLW) {
        if (power != 1) throw UnsupportedModelError("RLW model supports p = 1 only");
        if (speed == 0.0) throw InvalidParamsError("RLW requires c != 0");
    } else if (alpha < 1.0 && !(power < max_power(alpha))) {
        std::ostringstream os;
        os << "power " << power << " violates p < 2 alpha/(1 - alpha) = " << max_power(alpha);
        throw InvalidParamsError(os.str());
    }
}

namespace {

double ipow(double x, int q) {
    double r = 1.0;
    for (int i = 0; i < q; ++i) r *= x;
    return r;
}

// cos(2 pi j k / N) for j, k = 0..N/2, cached per thread.
const Eigen::MatrixXd& cosine_matrix(int n) {
    thread_local std::unordered_map<int, Eigen::MatrixXd> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    const int h = n / 2 + 1;
    Eigen::MatrixXd c(h, h);
    for (int j = 0; j < h; ++j)
        for (int k = 0; k < h; ++k) c(j, k) = std::cos(2.0 * kPi * static_cast<double>((j * k) % n) / n);
    return cache.emplace(n, std::move(c)).first->second;
}

// Trapezoid weights for the even half grid: node j in 0..N/2 stands for itself and x_{N-j}.
double half_weight(int j, int n) { return (j == 0 || 2 * j == n) ? 1.0 : 2.0; }

double half_l2(const Eigen::VectorXd& r, int n, double period) {
    double s = 0.0;
    for (int j = 0; j < r.size(); ++j) s += half_weight(j, n) * r[j] * r[j];
    return std::sqrt(s * period / n);
}

// Linear symbol on cosine coefficients (diagonal) and the derivative of the residual
// with respect to the speed, as functions of the mode index.
Eigen::VectorXd linear_diag(const Grid& g, const WaveParams& p) {
    const int h = g.num_modes();
    const DispersionSymbol sym{p.alpha};
    Eigen::VectorXd d(h);
    for (int k = 0; k < h; ++k) {
        const double lam = sym(g.wavenumber(k));
        d[k] = p.model == Model::KdV ? lam + p.speed : p.speed * (1.0 + lam) + 1.0;
    }
    return d;
}

Eigen::VectorXd speed_diag(const Grid& g, const WaveParams& p) {
    const int h = g.num_modes();
    const DispersionSymbol sym{p.alpha};
    Eigen::VectorXd d(h);
    for (int k = 0; k < h; ++k) d[k] = p.model == Model::KdV ? 1.0 : 1.0 + sym(g.wavenumber(k));
    return d;
}

struct Evaluation {
    Eigen::VectorXd u;  // half-grid node values
    Eigen::VectorXd r;  // half-grid residual
};

Evaluation evaluate(const Eigen::MatrixXd& C, const Eigen::VectorXd& b, const Grid& g,
                    const WaveParams& p) {
    Evaluation e;
    e.u = C * b;
    const Eigen::VectorXd d = linear_diag(g, p);
    e.r = C * d.cwiseProduct(b);
    const int q = p.model == Model::KdV ? p.power + 1 : 2;
    for (int j = 0; j < e.u.size(); ++j) e.r[j] += -ipow(e.u[j], q) + p.offset;
    return e;
}

Eigen::MatrixXd jacobian(const Eigen::MatrixXd& C, const Evaluation& e, const Grid& g,
                         const WaveParams& p) {
    const Eigen::VectorXd d = linear_diag(g, p);
    Eigen::MatrixXd J = C * d.asDiagonal();
    const int q = p.model == Model::KdV ? p.power + 1 : 2;
    for (int j = 0; j < e.u.size(); ++j) J.row(j) -= q * ipow(e.u[j], q - 1) * C.row(j);
    return J;
}

struct CoreResult {
    Eigen::VectorXd b;
    WaveParams params;
    double residual = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string message;
};

[[noreturn]] void throw_singular(const Eigen::MatrixXd& J) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const double smin = svd.singularValues().tail(1)[0];
    std::ostringstream os;
    os << "singular even-sector Jacobian (smallest singular value " << smin << ")";
    throw BifurcationPointError(os.str(), smin);
}

CoreResult newton_core(const Grid& g, Eigen::VectorXd b, WaveParams params,
                       std::optional<FreeParameter> free, const LinearConstraint* constraint,
                       const SolverConfig& cfg) {
    const int n = g.num_points();
    const int h = g.num_modes();
    const Eigen::MatrixXd& C = cosine_matrix(n);
    const bool extended = free.has_value();
    Eigen::VectorXd w;
    if (extended) {
        if (static_cast<int>(constraint->weights.size()) != h) {
            throw InvalidParamsError("constraint weight vector has wrong length");
        }
        w = Eigen::Map<const Eigen::VectorXd>(constraint->weights.data(), h);
    }
    auto theta = [&]() -> double& {
        return *free == FreeParameter::Speed ? params.speed : params.offset;
    };

    CoreResult out;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it <= cfg.max_iter; ++it) {
        const Evaluation e = evaluate(C, b, g, params);
        const double rn = half_l2(e.r, n, g.period());
        double gval = 0.0;
        if (extended) gval = w.dot(b) + constraint->param_weight * theta() - constraint->target;
        out.residual = rn;
        out.iterations = it;
        if (!std::isfinite(rn) || rn > 1e8) {
            out.message = "diverged";
            break;
        }
        if (rn <= cfg.tol && std::abs(gval) <= cfg.tol) {
            out.converged = true;
            break;
        }
        if (it == cfg.max_iter) {
            out.message = "max_iter reached";
            break;
        }
        // Roundoff floor: the update no longer shrinks the residual.
        if (it > 3 && rn > 0.5 * prev && rn < 1e3 * cfg.tol) {
            out.message = "stagnated above tolerance";
            break;
        }
        prev = rn;

        Eigen::MatrixXd J = jacobian(C, e, g, params);
        Eigen::VectorXd rhs = e.r;
        if (extended) {
            Eigen::MatrixXd Je(h + 1, h + 1);
            Je.topLeftCorner(h, h) = J;
            if (*free == FreeParameter::Speed) {
                Je.topRightCorner(h, 1) = C * speed_diag(g, params).cwiseProduct(b);
            } else {
                Je.topRightCorner(h, 1).setOnes();
            }
            Je.bottomLeftCorner(1, h) = w.transpose();
            Je(h, h) = constraint->param_weight;
            J = std::move(Je);
            rhs.conservativeResize(h + 1);
            rhs[h] = gval;
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        if (lu.rcond() < cfg.singular_rcond) throw_singular(J);
        const Eigen::VectorXd dz = lu.solve(rhs);
        b -= dz.head(h);
        if (extended) theta() -= dz[h];
    }
    out.b = std::move(b);
    out.params = params;
    return out;
}

TravelingWave finish(const Grid& g, const CoreResult& r, const SolverConfig& cfg) {
    TravelingWave w{from_cosine_coefficients(g, std::vector<double>(r.b.data(), r.b.data() + r.b.size())),
                    r.params, r.residual, "", r.converged, r.iterations, true, r.message};
    w.resolved = spectral_tail(w.profile) <= 1e-12 || w.profile.max_abs() == 0.0;
    if (!w.resolved && w.converged) {
        w.message = "converged but under-resolved (spectral tail above 1e-12)";
    }
    (void)cfg;
    return w;
}

Eigen::VectorXd coeffs_of(const RealField& u) {
    const auto b = cosine_coefficients(u);
    return Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
}

}  // namespace

std::vector<double> cosine_coefficients(const RealField& u) {
    const auto m = u.modes();
    const int h = static_cast<int>(m.size());
    std::vector<double> b(h);
    for (int k = 0; k < h; ++k) b[k] = (k == 0 || k == h - 1 ? 1.0 : 2.0) * m[k].real();
    return b;
}

RealField from_cosine_coefficients(const Grid& grid, const std::vector<double>& b) {
    const int h = grid.num_modes();
    if (static_cast<int>(b.size()) != h) throw InvalidFieldError("cosine coefficient count mismatch");
    std::vector<cplx> m(h);
    for (int k = 0; k < h; ++k) m[k] = (k == 0 || k == h - 1) ? b[k] : 0.5 * b[k];
    return RealField::from_modes(grid, m);
}

RealField residual(const RealField& u, const WaveParams& params) {
    params.validate();
    const int q = params.model == Model::KdV ? params.power + 1 : 2;
    RealField lin = params.model == Model::KdV
                        ? apply_fractional_laplacian(u, params.alpha) + u * params.speed
                        : (u + apply_fractional_laplacian(u, params.alpha)) * params.speed + u;
    std::vector<double> r(lin.values().begin(), lin.values().end());
    for (int j = 0; j < u.size(); ++j) r[j] += -ipow(u[j], q) + params.offset;
    return RealField(u.grid(), std::move(r));
}

TravelingWave make_wave(const RealField& u, const WaveParams& params, double tol) {
    TravelingWave w{u, params, l2_norm(residual(u, params)), "", false, 0, true, ""};
    w.converged = w.residual_norm <= tol;
    w.resolved = spectral_tail(u) <= 1e-12 || u.max_abs() == 0.0;
    return w;
}

TravelingWave newton_solve(const RealField& seed, const WaveParams& params, const SolverConfig& cfg) {
    params.validate();
    const Grid& g = seed.grid();
    auto r = newton_core(g, coeffs_of(seed), params, std::nullopt, nullptr, cfg);
    return finish(g, r, cfg);
}

TravelingWave newton_solve_constrained(const RealField& seed, const WaveParams& params,
                                       FreeParameter free, const LinearConstraint& constraint,
                                       const SolverConfig& cfg) {
    params.validate();
    const Grid& g = seed.grid();
    auto r = newton_core(g, coeffs_of(seed), params, free, &constraint, cfg);
    return finish(g, r, cfg);
}

std::vector<double> parameter_derivative(const TravelingWave& w, FreeParameter free,
                                         const SolverConfig& cfg) {
    const Grid& g = w.profile.grid();
    const Eigen::MatrixXd& C = cosine_matrix(g.num_points());
    const Eigen::VectorXd b = coeffs_of(w.profile);
    const Evaluation e = evaluate(C, b, g, w.params);
    const Eigen::MatrixXd J = jacobian(C, e, g, w.params);
    Eigen::VectorXd rt = free == FreeParameter::Speed
                             ? Eigen::VectorXd(C * speed_diag(g, w.params).cwiseProduct(b))
                             : Eigen::VectorXd::Ones(b.size());
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    if (lu.rcond() < cfg.singular_rcond) throw_singular(J);
    const Eigen::VectorXd db = -lu.solve(rt);
    return {db.data(), db.data() + db.size()};
}

double wave_amplitude(const RealField& u) { return 0.5 * (u[0] - u[u.size() / 2]); }

TravelingWave solve_at_amplitude(const RealField& seed, const WaveParams& params, double amplitude,
                                 FreeParameter free, const SolverConfig& cfg) {
    const int h = seed.grid().num_modes();
    LinearConstraint con;
    con.weights.assign(h, 0.0);
    // (u(0) - u(T/2)) / 2 = sum over odd k of b_k.
    for (int k = 1; k < h; k += 2) con.weights[k] = 1.0;
    con.target = amplitude;
    return newton_solve_constrained(seed, params, free, con, cfg);
}

double bifurcation_speed_correction(int k, double period, double alpha) {
    const double kap = std::pow(2.0 * kPi * k / period, alpha);
    return (-1.0 + 1.0 / (2.0 * (std::pow(2.0, alpha) - 1.0))) / kap;
}

Seed bifurcation_seed(int k, double period, double alpha, double eps, int num_points,
                      std::optional<double> kappa) {
    const Grid g(num_points, period);
    if (k < 1 || 3 * k >= num_points) throw InvalidParamsError("bifurcation_seed: need 1 <= k < N/3");
    if (std::abs(eps) > 0.5) warn_once("seed-eps", "bifurcation seed amplitude |eps| > 0.5");
    const double kap = kappa ? *kappa : -bifurcation_speed_correction(k, period, alpha) * eps;
    WaveParams p;
    p.alpha = alpha;
    p.period = period;
    p.speed = -std::pow(2.0 * kPi * k / period, alpha) - eps * kap;
    p.offset = 0.0;
    const double xi = 2.0 * kPi * k / period;
    auto f = RealField::from_function(g, [&](double x) { return eps * std::cos(xi * x); });
    return {f, p};
}

namespace {

int oscillation_count(const RealField& u) {
    const double m = mean(u);
    const int n = u.size();
    int changes = 0;
    for (int j = 0; j < n; ++j)
        if ((u[j] - m) * (u[(j + 1) % n] - m) < 0.0) ++changes;
    return changes;
}

}  // namespace

TravelingWave small_amplitude_wave(int k, double period, double alpha, double amplitude,
                                   int num_points, const SolverConfig& cfg) {
    // Direct solve only inside the weakly nonlinear regime; beyond it, step up in amplitude
    // and refuse steps that land on another branch.
    const double reach = 0.1 * std::pow(2.0 * kPi * k / period, alpha);
    double a = std::min(std::abs(amplitude), reach);
    if (amplitude < 0.0) a = -a;
    const auto s = bifurcation_seed(k, period, alpha, a, num_points);
    TravelingWave w = solve_at_amplitude(s.field, s.params, a, FreeParameter::Speed, cfg);
    double step = std::abs(a);
    while (w.converged && std::abs(a) < std::abs(amplitude)) {
        if (step < 1e-6 * std::abs(amplitude)) {
            w.converged = false;
            w.message = "amplitude stepping stalled";
            break;
        }
        const double next = std::abs(amplitude) - std::abs(a) <= step ? amplitude : a + std::copysign(step, amplitude);
        std::optional<TravelingWave> t;
        try {
            t = solve_at_amplitude(w.profile, w.params, next, FreeParameter::Speed, cfg);
        } catch (const BifurcationPointError&) {
        }
        if (t && t->converged && oscillation_count(t->profile) == 2 * k) {
            w = std::move(*t);
            a = next;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }
    return w;
}

TravelingWave galilean_shift(const TravelingWave& w, double s) {
    if (w.params.model != Model::KdV || w.params.power != 1) {
        throw UnsupportedModelError("Galilean shift needs the KdV model with p = 1");
    }
    TravelingWave out = w;
    out.profile = w.profile + s;
    out.params.speed = w.params.speed + 2.0 * s;
    out.params.offset = w.params.offset - w.params.speed * s - s * s;
    out.residual_norm = l2_norm(residual(out.profile, out.params));
    return out;
}

TravelingWave scale_wave(const TravelingWave& w, double lambda) {
    if (w.params.model != Model::KdV) throw UnsupportedModelError("scaling is for the KdV model");
    if (!(lambda > 0.0)) throw InvalidParamsError("scale factor must be positive");
    const double al = w.params.alpha;
    const int p = w.params.power;
    const Grid g(w.profile.grid().num_points(), w.profile.grid().period() / lambda);
    std::vector<double> v(w.profile.values().begin(), w.profile.values().end());
    const double amp = std::pow(lambda, al / p);
    for (double& x : v) x *= amp;
    TravelingWave out = w;
    out.profile = RealField(g, std::move(v));
    out.params.period = g.period();
    out.params.speed = std::pow(lambda, al) * w.params.speed;
    out.params.offset = std::pow(lambda, al * (p + 1) / p) * w.params.offset;
    out.residual_norm = l2_norm(residual(out.profile, out.params));
    return out;
}

std::pair<TravelingWave, TransformRecord> canonical_normalize(const TravelingWave& w) {
    if (w.params.model != Model::KdV || w.params.power != 1) {
        throw UnsupportedModelError("canonical_normalize needs the KdV model with p = 1");
    }
    const double c = w.params.speed, a = w.params.offset;
    const double disc = c * c + 4.0 * a;
    if (!(disc > 0.0)) throw NormalFormError("no real normal form: c^2 + 4a <= 0");
    TransformRecord rec;
    rec.gamma = std::sqrt(disc);
    rec.shift = 0.5 * (rec.gamma - c);
    rec.original = w.params;
    if (c == 1.0 && a == 0.0) return {w, rec};
    TravelingWave shifted = galilean_shift(w, rec.shift);
    shifted.params.speed = rec.gamma;
    shifted.params.offset = 0.0;
    auto out = scale_wave(shifted, std::pow(rec.gamma, -1.0 / w.params.alpha));
    out.params.speed = 1.0;
    out.params.offset = 0.0;
    out.residual_norm = l2_norm(residual(out.profile, out.params));
    return {out, rec};
}

TravelingWave inverse_normalize(const TravelingWave& w, const TransformRecord& rec) {
    if (rec.gamma == 1.0 && rec.shift == 0.0) {
        TravelingWave out = w;
        out.params = rec.original;
        return out;
    }
    const Grid g(w.profile.grid().num_points(), rec.original.period);
    std::vector<double> v(w.profile.values().begin(), w.profile.values().end());
    for (double& x : v) x = rec.gamma * x - rec.shift;
    TravelingWave out = w;
    out.profile = RealField(g, std::move(v));
    out.params = rec.original;
    out.residual_norm = l2_norm(residual(out.profile, out.params));
    return out;
}

TravelingWave rlw_to_kdv_reduction(const TravelingWave& w) {
    if (w.params.model != Model::RLW) throw UnsupportedModelError("reduction expects an RLW wave");
    const double c = w.params.speed, a = w.params.offset, al = w.params.alpha;
    if (!(c * (c + 1.0) > 0.0)) throw NormalFormError("reduction undefined: c(c+1) <= 0");
    const double mu = std::pow(2.0 * c / (c + 1.0), 1.0 / al);
    const Grid g(w.profile.grid().num_points(), w.params.period / mu);
    std::vector<double> v(w.profile.values().begin(), w.profile.values().end());
    for (double& x : v) x *= 2.0 / (c + 1.0);
    TravelingWave out = w;
    out.profile = RealField(g, std::move(v));
    out.params.model = Model::KdV;
    out.params.period = g.period();
    out.params.speed = 2.0;
    out.params.offset = 4.0 * a / ((c + 1.0) * (c + 1.0));
    out.residual_norm = l2_norm(residual(out.profile, out.params));
    return out;
}

IdentityResiduals integral_identity_residuals(const TravelingWave& w) {
    if (w.params.model != Model::KdV) throw UnsupportedModelError("integral identities are for KdV");
    const auto& u = w.profile;
    const int p = w.params.power;
    const auto f = functionals_kdv(u, w.params.alpha, p);
    const double c = w.params.speed, a = w.params.offset, T = w.params.period;
    IdentityResiduals r;
    r.r1 = std::abs(integrate_power(u, p + 1) - c * f.M - a * T);
    r.r2 = std::abs(2.0 * f.K + (p + 2) * f.U + 2.0 * c * f.P + a * f.M);
    return r;
}

std::vector<double> constant_solutions(const WaveParams& params) {
    std::vector<double> roots;
    if (params.model == Model::RLW || params.power == 1) {
        const double c = params.model == Model::RLW ? params.speed + 1.0 : params.speed;
        const double disc = c * c + 4.0 * params.offset;
        if (disc < 0.0) return roots;
        roots.push_back(0.5 * (c - std::sqrt(disc)));
        if (disc > 0.0) roots.push_back(0.5 * (c + std::sqrt(disc)));
        return roots;
    }
    // -u^{p+1} + c u + a = 0 for general p: bracket sign changes on a scan, then bisect.
    const int q = params.power + 1;
    auto f = [&](double x) { return -ipow(x, q) + params.speed * x + params.offset; };
    const double bound = 2.0 + std::abs(params.speed) + std::abs(params.offset);
    const int samples = 4000;
    double x0 = -bound, f0 = f(x0);
    for (int i = 1; i <= samples; ++i) {
        const double x1 = -bound + 2.0 * bound * i / samples, f1 = f(x1);
        if (f0 == 0.0) roots.push_back(x0);
        else if (f0 * f1 < 0.0) {
            double lo = x0, hi = x1;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (f(lo) * f(mid) <= 0.0) hi = mid; else lo = mid;
            }
            roots.push_back(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    return roots;
}

}  // namespace fracwave
