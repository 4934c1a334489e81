#include "fracwave/stability.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "fracwave/errors.hpp"

namespace fracwave {

double momentum(const TravelingWave& w) {
    return w.params.model == Model::KdV ? functionals_kdv(w.profile, w.params.alpha, w.params.power).P
                                        : functionals_rlw(w.profile, w.params.alpha).P;
}

double mass(const TravelingWave& w) { return integrate(w.profile); }

namespace {

// Variational derivative of the momentum.
RealField momentum_gradient(const TravelingWave& w) {
    if (w.params.model == Model::KdV) return w.profile;
    return w.profile + apply_fractional_laplacian(w.profile, w.params.alpha);
}

void finish_jacobian(ParameterJacobian& J) {
    J.determinant = J.M_a * J.P_c - J.M_c * J.P_a;
    J.symmetry_defect = std::abs(J.M_c - J.P_a);
}

// One Richardson-combined stencil at the given step; gap is the largest relative
// disagreement between the h and h/2 central differences.
ParameterJacobian jacobian_at(const TravelingWave& w, double step, const SolverConfig& cfg, double* gap) {
    ParameterJacobian J;
    J.fd_step = step;
    *gap = 0.0;
    struct Sample {
        double P = 0.0, M = 0.0;
        bool ok = false;
    };
    // A nearby re-solve that lands on a different branch (often the constant one) is a failure.
    // For a constant wave the re-solve has to stay constant.
    const double osc = l2_norm(w.profile - RealField::constant(w.profile.grid(), mean(w.profile)));
    const bool flat = osc <= 1e-12 * std::max(1.0, l2_norm(w.profile));
    auto solve_at = [&](double dc, double da) {
        WaveParams p = w.params;
        p.speed += dc;
        p.offset += da;
        Sample s;
        try {
            const auto v = newton_solve(w.profile, p, cfg);
            const double dev = flat ? l2_norm(v.profile - RealField::constant(v.profile.grid(), mean(v.profile)))
                                    : l2_norm(v.profile - w.profile);
            if (v.converged && dev <= (flat ? 1e-10 * std::max(1.0, l2_norm(v.profile)) : 0.5 * osc)) s = {momentum(v), mass(v), true};
        } catch (const std::exception&) {
        }
        return s;
    };
    const Sample st[8] = {solve_at(step, 0), solve_at(-step, 0), solve_at(0, step), solve_at(0, -step),
                          solve_at(step / 2, 0), solve_at(-step / 2, 0), solve_at(0, step / 2), solve_at(0, -step / 2)};
    for (const auto& s : st) J.failure_mask.push_back(!s.ok);
    auto derivative = [&](int i, double* dP, double* dM) {
        // i = 0 for c, 2 for a; indices i, i+1 at h and i+4, i+5 at h/2.
        const bool full = st[i].ok && st[i + 1].ok, half = st[i + 4].ok && st[i + 5].ok;
        const double Dh_P = full ? (st[i].P - st[i + 1].P) / (2 * step) : 0.0;
        const double Dh_M = full ? (st[i].M - st[i + 1].M) / (2 * step) : 0.0;
        const double Dq_P = half ? (st[i + 4].P - st[i + 5].P) / step : 0.0;
        const double Dq_M = half ? (st[i + 4].M - st[i + 5].M) / step : 0.0;
        if (full && half) {
            *dP = (4 * Dq_P - Dh_P) / 3;
            *dM = (4 * Dq_M - Dh_M) / 3;
            *gap = std::max({*gap, std::abs(Dq_P - Dh_P) / std::max(1.0, std::abs(*dP)),
                             std::abs(Dq_M - Dh_M) / std::max(1.0, std::abs(*dM))});
        } else if (half || full) {
            *dP = half ? Dq_P : Dh_P;
            *dM = half ? Dq_M : Dh_M;
            J.complete = false;
        } else {
            *dP = *dM = std::numeric_limits<double>::quiet_NaN();
            J.complete = false;
        }
    };
    derivative(0, &J.P_c, &J.M_c);
    derivative(2, &J.P_a, &J.M_a);
    finish_jacobian(J);
    return J;
}

}  // namespace

ParameterJacobian parameter_jacobian(const TravelingWave& w, double h, const SolverConfig& cfg) {
    double step = h * std::max(1.0, std::abs(w.params.speed));
    double gap = 0.0;
    ParameterJacobian J = jacobian_at(w, step, cfg, &gap);
    // Close to a bifurcation the family curves on a scale below h: shrink until the two
    // stencils agree or stop improving.
    for (int r = 0; r < 4 && (!J.complete || gap > 1e-6); ++r) {
        step /= 4;
        double g2 = 0.0;
        ParameterJacobian J2 = jacobian_at(w, step, cfg, &g2);
        const bool better = (J2.complete && !J.complete) || (J2.complete == J.complete && g2 < gap);
        if (!better) break;
        J = std::move(J2);
        gap = g2;
    }
    return J;
}

ParameterJacobian parameter_jacobian_deflated(const TravelingWave& w) {
    const LinearOperator L = build_second_variation(w);
    const RealField dP = momentum_gradient(w);
    const RealField one = RealField::constant(w.profile.grid(), 1.0);
    const RealField uc = -range_membership(L, dP).preimage;
    const RealField ua = -range_membership(L, one).preimage;
    ParameterJacobian J;
    J.M_c = integrate(uc);
    J.P_c = inner(dP, uc);
    J.M_a = integrate(ua);
    J.P_a = inner(dP, ua);
    finish_jacobian(J);
    return J;
}

IndexPrediction negative_index_predict(const ParameterJacobian& J, double det_tol) {
    IndexPrediction r;
    if (!(std::abs(J.determinant) > det_tol) || J.M_a == 0.0) {
        r.marginal = true;
        return r;
    }
    const double seq[3] = {1.0, J.M_a, J.determinant};
    for (int i = 0; i < 2; ++i) {
        if ((seq[i] > 0) != (seq[i + 1] > 0)) ++r.n_minus;
    }
    return r;
}

int projected_index_predict(int n_minus_full, double M_a) { return n_minus_full - (M_a >= 0.0 ? 1 : 0); }

int projected_kernel_predict(int kernel_full, double M_a, double ma_tol) {
    return kernel_full + (std::abs(M_a) <= ma_tol ? 1 : 0);
}

std::string to_string(Classification c) {
    switch (c) {
        case Classification::StableConstrained: return "stable_constrained";
        case Classification::StableFull: return "stable_full";
        case Classification::LinearlyUnstable: return "linearly_unstable";
        case Classification::Inconclusive: return "inconclusive";
        case Classification::Marginal: return "marginal";
    }
    return "?";
}

Classification classification_from_string(const std::string& s) {
    for (auto c : {Classification::StableConstrained, Classification::StableFull, Classification::LinearlyUnstable,
                   Classification::Inconclusive, Classification::Marginal}) {
        if (to_string(c) == s) return c;
    }
    throw SchemaVersionError("unknown classification '" + s + "'");
}

Decision decide(const DecisionInputs& in) {
    Decision d;
    if (!in.nondegenerate) {
        d.criteria_fired.push_back("kernel degenerate: ker(d2E) != span{u_x}");
        d.classification = Classification::Inconclusive;
        return d;
    }
    if (in.minimizer_certified) {
        if (in.certificate_marginal) {
            d.criteria_fired.push_back("projected positivity within tolerance band");
            d.classification = Classification::Marginal;
            return d;
        }
        d.criteria_fired.push_back("local constrained minimizer: d2E >= 0 on {dP, dM}^perp");
        d.classification = Classification::StableConstrained;
        if (std::abs(in.determinant) > in.det_tol) {
            d.criteria_fired.push_back("nondegenerate (M, P) Jacobian: all nearby perturbations");
            d.classification = Classification::StableFull;
        }
        return d;
    }
    if (in.projected_marginal || !(std::abs(in.P_c) > in.pc_tol)) {
        d.criteria_fired.push_back("projected index or P_c within tolerance band");
        d.classification = Classification::Marginal;
        return d;
    }
    const bool odd = in.n_minus_projected % 2 == 1;
    if (odd && in.P_c < 0.0) {
        d.criteria_fired.push_back("parity criterion (1): n_-(Pi L Pi) odd and P_c < 0");
        d.classification = Classification::LinearlyUnstable;
    } else if (!odd && in.P_c > 0.0) {
        d.criteria_fired.push_back("parity criterion (2): n_-(Pi L Pi) even and P_c > 0");
        d.classification = Classification::LinearlyUnstable;
    } else {
        d.criteria_fired.push_back("parity criteria not met");
        d.classification = Classification::Inconclusive;
    }
    return d;
}

std::vector<double> log_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2) throw InvalidParamsError("log_grid: need 0 < lo < hi, count >= 2");
    std::vector<double> g(count);
    for (int i = 0; i < count; ++i) g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
    return g;
}

namespace {

struct AmuSystem {
    std::vector<int> ks;  // signed wavenumber indices, |k| < N/2, k != 0
    Eigen::MatrixXcd B;   // M - f'(u) in the exponential basis
    Eigen::VectorXd xi;
    double c = 0.0;
};

AmuSystem amu_system(const TravelingWave& w) {
    if (w.params.model != Model::KdV) throw UnsupportedModelError("growing-mode scan is for the KdV model");
    if (w.params.speed == 0.0) throw InvalidParamsError("growing-mode scan needs c != 0");
    const LinearOperator L = build_second_variation(w);
    const Grid& g = L.grid;
    const int n = g.num_points();
    AmuSystem s;
    s.c = w.params.speed;
    for (int k = -(n / 2 - 1); k <= n / 2 - 1; ++k)
        if (k != 0) s.ks.push_back(k);
    const int d = static_cast<int>(s.ks.size());
    const auto vm = L.potential.modes();
    auto vhat = [&](int m) -> cplx {
        m = ((m % n) + n) % n;
        return m <= n / 2 ? vm[m] : std::conj(vm[n - m]);
    };
    s.B.resize(d, d);
    s.xi.resize(d);
    for (int i = 0; i < d; ++i) {
        s.xi[i] = 2.0 * kPi * s.ks[i] / g.period();
        for (int j = 0; j < d; ++j) s.B(i, j) = vhat(s.ks[i] - s.ks[j]);
        s.B(i, i) += L.multiplier[std::abs(s.ks[i])];
    }
    return s;
}

Eigen::MatrixXcd amu_matrix(const AmuSystem& s, double mu) {
    const int d = static_cast<int>(s.ks.size());
    Eigen::MatrixXcd A(d, d);
    for (int i = 0; i < d; ++i) {
        const cplx ck{0.0, s.c * s.xi[i]};
        const cplx factor = ck / (mu - ck);
        A.row(i) = -factor * s.B.row(i);
        A(i, i) += s.c;
    }
    return A;
}

int left_count(const Eigen::VectorXcd& ev, double tol) {
    int n = 0;
    for (int i = 0; i < ev.size(); ++i)
        if (ev[i].real() < -tol) ++n;
    return n;
}

}  // namespace

Eigen::VectorXcd amu_eigenvalues(const TravelingWave& w, double mu) {
    const auto s = amu_system(w);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(amu_matrix(s, mu), false);
    return es.eigenvalues();
}

ScanResult growing_mode_scan(const TravelingWave& w, const std::vector<double>& mu_grid, double fit_max_mu) {
    ScanResult r;
    r.exploratory = w.params.alpha < 1.0;
    if (mu_grid.empty()) return r;
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
        if (!(mu_grid[i] > 0.0) || (i > 0 && !(mu_grid[i] > mu_grid[i - 1]))) {
            throw InvalidParamsError("mu grid must be positive and increasing");
        }
    }
    const AmuSystem s = amu_system(w);
    const int d = static_cast<int>(s.ks.size());
    const double radius = s.B.cwiseAbs().rowwise().sum().maxCoeff() + std::abs(s.c);
    const double tol = 1e-10 * radius;

    // Translation mode u_x in the exponential basis.
    Eigen::VectorXcd ux(d);
    const auto um = w.profile.modes();
    for (int i = 0; i < d; ++i) {
        const int k = s.ks[i];
        const cplx uk = k > 0 ? um[k] : std::conj(um[-k]);
        ux[i] = cplx{0.0, s.xi[i]} * uk;
    }
    const bool trivial = ux.norm() == 0.0;
    if (!trivial) ux.normalize();

    Eigen::VectorXcd prev_vec;
    for (std::size_t gi = 0; gi < mu_grid.size(); ++gi) {
        const double mu = mu_grid[gi];
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(amu_matrix(s, mu));
        const auto& ev = es.eigenvalues();
        int best = 0;
        double best_overlap = -1.0;
        for (int i = 0; i < d; ++i) {
            const Eigen::VectorXcd v = es.eigenvectors().col(i).normalized();
            double ov;
            if (gi == 0) ov = trivial ? -std::abs(ev[i]) : std::abs(ux.dot(v));
            else ov = std::abs(prev_vec.dot(v));
            if (ov > best_overlap) {
                best_overlap = ov;
                best = i;
            }
        }
        if (gi > 0 && best_overlap < 0.5) {
            r.aborted = true;
            r.message = "eigenvalue tracking lost continuity";
            break;
        }
        prev_vec = es.eigenvectors().col(best).normalized();
        r.mu.push_back(mu);
        r.e_mu.push_back(ev[best]);
        r.left_count.push_back(left_count(ev, tol));
        r.last_good_mu = mu;
    }

    // Parity change in the number of left-half-plane eigenvalues signals a real crossing.
    for (std::size_t i = 1; i < r.left_count.size(); ++i) {
        if ((r.left_count[i] - r.left_count[i - 1]) % 2 == 0) continue;
        double lo = r.mu[i - 1], hi = r.mu[i];
        const int parity_lo = r.left_count[i - 1] % 2;
        for (int it = 0; it < 60 && hi - lo > 1e-13 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(amu_matrix(s, mid), false);
            if (left_count(es.eigenvalues(), tol) % 2 == parity_lo) lo = mid; else hi = mid;
        }
        const double mu_star = 0.5 * (lo + hi);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(amu_matrix(s, mu_star));
        int imin = 0;
        for (int k = 1; k < d; ++k)
            if (std::abs(es.eigenvalues()[k]) < std::abs(es.eigenvalues()[imin])) imin = k;
        const Eigen::VectorXcd v = es.eigenvectors().col(imin);
        // Rotate so the largest coefficient is real, then synthesize the real field.
        int kmax = 0;
        v.cwiseAbs().maxCoeff(&kmax);
        const cplx phase = std::conj(v[kmax]) / std::abs(v[kmax]);
        const Grid& g = w.profile.grid();
        std::vector<cplx> modes(g.num_modes(), cplx{0.0, 0.0});
        for (int k = 0; k < d; ++k)
            if (s.ks[k] > 0) modes[s.ks[k]] += 0.5 * phase * v[k];
        for (int k = 0; k < d; ++k)
            if (s.ks[k] < 0) modes[-s.ks[k]] += 0.5 * std::conj(phase * v[k]);
        r.crossing_found = true;
        r.growing_mode = GrowingMode{mu_star, RealField::from_modes(g, modes)};
        break;
    }

    // Fit e = sum_{j=1..J} L_j mu^j over the small-mu points, each row scaled by 1/mu^2 so
    // that the smallest mu carry the limit.
    std::vector<int> pts;
    for (std::size_t i = 0; i < r.mu.size(); ++i)
        if (r.mu[i] <= fit_max_mu) pts.push_back(static_cast<int>(i));
    if (pts.size() >= 3) {
        const int terms = std::min<int>(5, static_cast<int>(pts.size()) - 1);
        Eigen::MatrixXd X(pts.size(), terms);
        Eigen::VectorXd y(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double mu = r.mu[pts[i]];
            for (int j = 0; j < terms; ++j) X(i, j) = std::pow(mu, j + 1) / (mu * mu);
            y[i] = r.e_mu[pts[i]].real() / (mu * mu);
        }
        const Eigen::VectorXd coef = X.colPivHouseholderQr().solve(y);
        r.L1 = coef[0];
        r.L2 = coef[1];
    }
    return r;
}

StabilityVerdict classify(const TravelingWave& w, const ClassifyOptions& opts) {
    StabilityVerdict v;
    v.exploratory = w.params.alpha < 1.0;
    try {
        const LinearOperator L = build_second_variation(w);
        const SpectrumReport full = eigen_spectrum(L, Sector::Full);
        const SpectrumReport proj = eigen_spectrum(project_mean_zero(L), Sector::Full);
        const KernelVerdict kv = kernel_check(L, w);
        const SpectrumReport cert = constrained_spectrum(
            L, {momentum_gradient(w), RealField::constant(w.profile.grid(), 1.0)});
        v.n_minus_L = full.n_minus;
        v.n_minus_projected = proj.n_minus;
        v.kernel_dim = full.kernel_dim;
        v.zero_tol = full.zero_tol;
        double cmin = std::numeric_limits<double>::infinity();
        for (double e : cert.eigenvalues)
            if (std::abs(e) > cert.zero_tol) cmin = std::min(cmin, e);
        v.certificate_min = cmin;

        v.jacobian = parameter_jacobian(w, opts.fd_step);
        if (!v.jacobian.complete) {
            v.diagnostics += "finite-difference stencil incomplete; using deflated-solve Jacobian. ";
            v.jacobian = parameter_jacobian_deflated(w);
        }
        const auto& J = v.jacobian;
        v.P_c = J.P_c;
        v.P_c_sign = (J.P_c > 0) - (J.P_c < 0);
        v.P_c_constrained = J.M_a != 0.0 ? J.determinant / J.M_a : std::numeric_limits<double>::quiet_NaN();
        v.det_tol = 1e-6 * std::max(std::abs(J.M_a * J.P_c), std::abs(J.M_c * J.P_a));

        DecisionInputs in;
        in.nondegenerate = kv.nondegenerate || (kv.trivial_wave && kv.kernel_dim == 0);
        in.minimizer_certified = opts.variational_provenance || cert.n_minus == 0;
        in.certificate_marginal = !opts.variational_provenance && cert.marginal && cert.n_minus == 0 &&
                                  cmin < 10.0 * cert.zero_tol;
        in.determinant = J.determinant;
        in.det_tol = v.det_tol;
        in.n_minus_projected = proj.n_minus;
        in.projected_marginal = proj.marginal;
        in.P_c = J.P_c;
        in.pc_tol = 1e-8 * std::max({1.0, std::abs(J.M_a), std::abs(J.P_a)});
        const Decision d = decide(in);
        v.classification = d.classification;
        v.criteria_fired = d.criteria_fired;
        if (v.exploratory) v.criteria_fired.push_back("alpha < 1: instability machinery exploratory");

        if (d.classification == Classification::LinearlyUnstable && opts.run_scan) {
            const auto grid = opts.mu_grid.empty() ? log_grid(1e-3, 1e2, 60) : opts.mu_grid;
            const ScanResult scan = growing_mode_scan(w, grid);
            if (scan.growing_mode) {
                v.growing_mode = scan.growing_mode;
                v.criteria_fired.push_back("growing mode found by A^mu scan");
            } else {
                v.diagnostics += "A^mu scan found no crossing on the grid. ";
            }
        }
    } catch (const std::exception& e) {
        v.classification = Classification::Inconclusive;
        v.diagnostics += std::string("failure: ") + e.what();
    }
    return v;
}

TravelingWave unit_speed_wave(double alpha, double period, double offset, int num_points,
                              const SolverConfig& cfg) {
    const double disc = 1.0 + 4.0 * offset;
    if (!(disc > 0.0)) throw NormalFormError("no real normal form: 1 + 4a <= 0");
    const double gamma = std::sqrt(disc);
    const double kap = std::pow(2.0 * kPi / period, alpha);
    if (!(gamma > kap * (1.0 + 1e-9))) {
        throw InvalidParamsError("no nontrivial unit-speed wave: normal-form period does not exceed 2 pi");
    }
    const auto start = small_amplitude_wave(1, period, alpha, 0.02 * std::min(1.0, kap), num_points, cfg);
    if (!start.converged) throw ConstraintViolationError("branch start did not converge");
    ContinuationConfig cc;
    cc.solver = cfg;
    const auto at_speed = continue_to_speed(start, -gamma, cc);
    if (!at_speed.converged) throw ConstraintViolationError("continuation to the target speed failed");
    auto shifted = galilean_shift(at_speed, 0.5 * (1.0 + gamma));
    WaveParams p = shifted.params;
    p.speed = 1.0;
    p.offset = offset;
    auto w = newton_solve(shifted.profile, p, cfg);
    return w;
}

LimitReport solitary_limit_report(const Branch& branch) {
    LimitReport rep;
    for (const auto& w : branch.points) {
        LimitRow row;
        row.period = w.params.period;
        row.speed = w.params.speed;
        row.offset = w.params.offset;
        row.resolved = w.resolved && w.converged;
        if (!row.resolved) row.flag = "unresolved or not converged";
        try {
            const auto J = parameter_jacobian(w);
            row.M_a = J.M_a;
            row.M_c = J.M_c;
            row.P_c = J.P_c;
            row.determinant = J.determinant;
            row.identity_defect = J.M_a + row.period - 2.0 * J.M_c;
            if (!J.complete) row.flag += " incomplete Jacobian";
            const LinearOperator L = build_second_variation(w);
            row.n_minus_L = eigen_spectrum(L, Sector::Full).n_minus;
            row.n_minus_projected = eigen_spectrum(project_mean_zero(L), Sector::Full).n_minus;
        } catch (const std::exception& e) {
            row.flag += std::string(" failure: ") + e.what();
            row.resolved = false;
        }
        rep.rows.push_back(row);
    }
    std::vector<std::size_t> order(rep.rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return rep.rows[a].period < rep.rows[b].period; });
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& row = rep.rows[order[r]];
        rep.max_identity_defect = std::max(rep.max_identity_defect, std::abs(row.identity_defect));
        rep.ma_negative = rep.ma_negative && row.M_a < 0.0;
        rep.pc_positive = rep.pc_positive && row.P_c > 0.0;
        if (r + 2 >= order.size()) {
            rep.indices_one_at_largest =
                rep.indices_one_at_largest && row.n_minus_L == 1 && row.n_minus_projected == 1;
        }
    }
    return rep;
}

CriteriaReport gss_solitary_criteria(const TravelingWave& w) {
    CriteriaReport rep;
    const LinearOperator L = build_second_variation(w);
    const KernelVerdict kv = kernel_check(L, w);
    const SpectrumReport full = eigen_spectrum(L, Sector::Full);
    if (kv.trivial_wave) {
        rep.applicable = false;
        rep.note = "not applicable: trivial wave (n_- = " + std::to_string(full.n_minus) + ")";
        rep.single_negative.margin = full.n_minus;
        return rep;
    }
    rep.kernel_translation_only = {kv.nondegenerate, kv.alignment};
    // Margin for n_- = 1: distance of the nearest non-kernel eigenvalue to zero.
    double gap = std::numeric_limits<double>::infinity();
    for (double e : full.eigenvalues)
        if (std::abs(e) > full.zero_tol) gap = std::min(gap, std::abs(e));
    rep.single_negative = {full.n_minus == 1, full.n_minus == 1 ? gap : -std::abs(full.n_minus - 1.0)};
    const auto J = parameter_jacobian(w);
    rep.pc_positive = {J.P_c > 0.0, J.P_c};
    return rep;
}

}  // namespace fracwave
