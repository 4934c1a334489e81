#include "fracwave/linearization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "fracwave/errors.hpp"

namespace fracwave {

std::string to_string(Sector s) {
    switch (s) {
        case Sector::Full: return "full";
        case Sector::Even: return "even";
        case Sector::Odd: return "odd";
    }
    return "?";
}

Sector sector_from_string(const std::string& s) {
    if (s == "full") return Sector::Full;
    if (s == "even") return Sector::Even;
    if (s == "odd") return Sector::Odd;
    throw SectorError("unknown sector '" + s + "'");
}

namespace {

// Half-spectrum index of basis column m.
int mode_of(int m, int n) { return m <= n / 2 ? m : m - n / 2; }

Eigen::VectorXd coords(const Grid& g, const RealField& f, const std::vector<int>& idx) {
    const Eigen::MatrixXd& E = trig_basis(g);
    const Eigen::Map<const Eigen::VectorXd> v(f.values().data(), f.size());
    Eigen::VectorXd c(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) c[i] = g.spacing() * E.col(idx[i]).dot(v);
    return c;
}

RealField field_of(const Grid& g, const Eigen::VectorXd& c, const std::vector<int>& idx) {
    const Eigen::MatrixXd& E = trig_basis(g);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(g.num_points());
    for (std::size_t i = 0; i < idx.size(); ++i) v += c[i] * E.col(idx[i]);
    return RealField(g, std::vector<double>(v.data(), v.data() + v.size()));
}

double default_tol(const Eigen::VectorXd& evals) {
    return 1e-8 * std::max(evals.cwiseAbs().maxCoeff(), 1e-300);
}

void fill_counts(SpectrumReport& rep) {
    rep.n_minus = 0;
    rep.kernel_dim = 0;
    rep.marginal = false;
    for (double e : rep.eigenvalues) {
        if (e < -rep.zero_tol) ++rep.n_minus;
        else if (e <= rep.zero_tol) ++rep.kernel_dim;
        if (std::abs(e) > rep.zero_tol && std::abs(e) < 10.0 * rep.zero_tol) rep.marginal = true;
    }
}

}  // namespace

const Eigen::MatrixXd& trig_basis(const Grid& g) {
    thread_local std::map<std::pair<int, double>, Eigen::MatrixXd> cache;
    const auto key = std::make_pair(g.num_points(), g.period());
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const int n = g.num_points();
    const double T = g.period();
    Eigen::MatrixXd E(n, n);
    const double c0 = 1.0 / std::sqrt(T), ck = std::sqrt(2.0 / T);
    for (int j = 0; j < n; ++j) {
        E(j, 0) = c0;
        for (int k = 1; k < n / 2; ++k) {
            const double th = 2.0 * kPi * static_cast<double>((static_cast<long>(j) * k) % n) / n;
            E(j, k) = ck * std::cos(th);
            E(j, n / 2 + k) = ck * std::sin(th);
        }
        E(j, n / 2) = (j % 2 == 0 ? 1.0 : -1.0) * c0;
    }
    return cache.emplace(key, std::move(E)).first->second;
}

std::vector<int> sector_indices(const Grid& g, Sector sector, bool projected) {
    const int n = g.num_points();
    std::vector<int> idx;
    const int first = projected ? 1 : 0;
    if (sector != Sector::Odd)
        for (int m = first; m <= n / 2; ++m) idx.push_back(m);
    if (sector != Sector::Even)
        for (int m = n / 2 + 1; m < n; ++m) idx.push_back(m);
    return idx;
}

RealField LinearOperator::apply(const RealField& f) const {
    require_same_grid(f, potential);
    RealField in = projected ? f + (-mean(f)) : f;
    std::vector<cplx> m(in.modes().begin(), in.modes().end());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] *= multiplier[k] + constant_shift;
    const RealField lin = RealField::from_modes(grid, m);
    std::vector<double> v(lin.values().begin(), lin.values().end());
    for (int j = 0; j < f.size(); ++j) v[j] += potential[j] * in[j];
    RealField out(grid, std::move(v));
    return projected ? out + (-mean(out)) : out;
}

bool LinearOperator::potential_is_even(double rel_tol) const {
    const int n = grid.num_points();
    const double scale = std::max(potential.max_abs(), 1e-300);
    for (int j = 1; j < n; ++j) {
        if (std::abs(potential[j] - potential[n - j]) > rel_tol * scale) return false;
    }
    return true;
}

LinearOperator build_second_variation(const TravelingWave& w) {
    const Grid& g = w.profile.grid();
    const auto& p = w.params;
    const DispersionSymbol sym{p.alpha};
    std::vector<double> mult(g.num_modes());
    std::vector<double> pot(g.num_points());
    double shift = 0.0;
    if (p.model == Model::KdV) {
        for (int k = 0; k < g.num_modes(); ++k) mult[k] = sym(g.wavenumber(k));
        for (int j = 0; j < g.num_points(); ++j) pot[j] = -(p.power + 1) * std::pow(w.profile[j], p.power);
        shift = p.speed;
    } else {
        for (int k = 0; k < g.num_modes(); ++k) mult[k] = p.speed * sym(g.wavenumber(k));
        for (int j = 0; j < g.num_points(); ++j) pot[j] = -2.0 * w.profile[j];
        shift = p.speed + 1.0;
    }
    return LinearOperator{g, std::move(mult), RealField(g, std::move(pot)), shift, false};
}

Eigen::MatrixXd dense_matrix(const LinearOperator& op, Sector sector) {
    if (sector != Sector::Full && !op.potential_is_even()) {
        throw SectorError("parity sectors need an even potential");
    }
    const Grid& g = op.grid;
    const int n = g.num_points();
    const auto idx = sector_indices(g, sector, op.projected);
    const Eigen::MatrixXd& E = trig_basis(g);
    Eigen::MatrixXd Es(n, idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) Es.col(i) = E.col(idx[i]);
    const Eigen::Map<const Eigen::VectorXd> V(op.potential.values().data(), n);
    Eigen::MatrixXd A = g.spacing() * (Es.transpose() * (V.asDiagonal() * Es));
    for (std::size_t i = 0; i < idx.size(); ++i) A(i, i) += op.multiplier[mode_of(idx[i], n)] + op.constant_shift;
    // Symmetrize away roundoff.
    return 0.5 * (A + A.transpose());
}

SpectrumReport eigen_spectrum(const LinearOperator& op, Sector sector, int k_request, double zero_tol) {
    const Eigen::MatrixXd A = dense_matrix(op, sector);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, k_request > 0 ? Eigen::ComputeEigenvectors
                                                                         : Eigen::EigenvaluesOnly);
    SpectrumReport rep;
    rep.sector = sector;
    const Eigen::VectorXd& ev = es.eigenvalues();
    rep.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    rep.zero_tol = zero_tol > 0.0 ? zero_tol : default_tol(ev);
    fill_counts(rep);
    if (k_request > 0) {
        const auto idx = sector_indices(op.grid, sector, op.projected);
        const int kk = std::min<int>(k_request, ev.size());
        for (int i = 0; i < kk; ++i) rep.eigenfunctions.push_back(field_of(op.grid, es.eigenvectors().col(i), idx));
    }
    return rep;
}

SpectrumReport constrained_spectrum(const LinearOperator& op, const std::vector<RealField>& constraints,
                                    double zero_tol) {
    const Eigen::MatrixXd A = dense_matrix(op, Sector::Full);
    const auto idx = sector_indices(op.grid, Sector::Full, op.projected);
    const int dim = static_cast<int>(idx.size());
    Eigen::MatrixXd Cm(dim, constraints.size());
    for (std::size_t i = 0; i < constraints.size(); ++i) Cm.col(i) = coords(op.grid, constraints[i], idx);
    // Drop numerically dependent constraints.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Cm);
    qr.setThreshold(1e-12);
    const int rank = static_cast<int>(qr.rank());
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
    const Eigen::MatrixXd Z = Q.rightCols(dim - rank);
    const Eigen::MatrixXd B = Z.transpose() * A * Z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (B + B.transpose()), Eigen::EigenvaluesOnly);
    SpectrumReport rep;
    rep.sector = Sector::Full;
    const Eigen::VectorXd& ev = es.eigenvalues();
    rep.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    rep.zero_tol = zero_tol > 0.0 ? zero_tol : default_tol(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A, Eigen::EigenvaluesOnly).eigenvalues());
    fill_counts(rep);
    return rep;
}

KernelVerdict kernel_check(const LinearOperator& op, const TravelingWave& w) {
    KernelVerdict v;
    const Eigen::MatrixXd A = dense_matrix(op, Sector::Full);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double tol = default_tol(ev);
    const auto idx = sector_indices(op.grid, Sector::Full, op.projected);
    const RealField ux = differentiate(w.profile);
    const double nux = l2_norm(ux);
    v.trivial_wave = nux <= 1e-12 * std::max(1.0, w.profile.max_abs());
    Eigen::VectorXd cu = coords(op.grid, ux, idx);
    if (!v.trivial_wave) cu /= cu.norm();
    double proj2 = 0.0;
    for (int i = 0; i < ev.size(); ++i) {
        if (std::abs(ev[i]) <= tol) {
            ++v.kernel_dim;
            if (!v.trivial_wave) proj2 += std::pow(es.eigenvectors().col(i).dot(cu), 2);
        }
    }
    v.alignment = std::sqrt(std::min(proj2, 1.0));
    v.angle = std::acos(std::min(v.alignment, 1.0));
    v.nondegenerate = !v.trivial_wave && v.kernel_dim == 1 && v.alignment > 0.999;
    return v;
}

int nodal_count(const RealField& v) {
    const int n = v.size();
    const double thresh = 1e-10 * v.max_abs();
    if (v.max_abs() == 0.0) throw InvalidFieldError("nodal_count: all-zero field");
    std::vector<int> s(n, 0);
    for (int j = 0; j < n; ++j) {
        if (std::abs(v[j]) > thresh) s[j] = v[j] > 0.0 ? 1 : -1;
    }
    std::vector<int> snapped = s;
    for (int j = 0; j < n; ++j) {
        if (s[j] != 0) continue;
        for (int d = 1; d < n; ++d) {
            const int left = s[((j - d) % n + n) % n], right = s[(j + d) % n];
            if (left != 0) { snapped[j] = left; break; }
            if (right != 0) { snapped[j] = right; break; }
        }
    }
    int count = 0;
    for (int j = 0; j < n; ++j) {
        if (snapped[j] != snapped[(j + 1) % n]) ++count;
    }
    return count;
}

LinearOperator project_mean_zero(const LinearOperator& op) {
    if (op.projected) throw OperatorStateError("operator is already projected");
    LinearOperator out = op;
    out.projected = true;
    return out;
}

RangeResult range_membership(const LinearOperator& op, const RealField& f) {
    const Eigen::MatrixXd A = dense_matrix(op, Sector::Full);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double tol = default_tol(ev);
    const auto idx = sector_indices(op.grid, Sector::Full, op.projected);
    RealField target = op.projected ? f + (-mean(f)) : f;
    const Eigen::VectorXd cf = coords(op.grid, target, idx);
    const double nf = std::max(cf.norm(), 1e-300);
    Eigen::VectorXd pre = Eigen::VectorXd::Zero(cf.size());
    double overlap = 0.0, smallest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < ev.size(); ++i) {
        const double proj = es.eigenvectors().col(i).dot(cf);
        if (std::abs(ev[i]) <= tol) {
            overlap = std::max(overlap, std::abs(proj) / nf);
        } else {
            pre += (proj / ev[i]) * es.eigenvectors().col(i);
            smallest = std::min(smallest, std::abs(ev[i]));
        }
    }
    RangeResult r{false, field_of(op.grid, pre, idx), overlap, 0.0, false};
    r.in_range = overlap <= 1e-8;
    r.condition = ev.cwiseAbs().maxCoeff() / smallest;
    r.ill_conditioned = r.condition > 1e12;
    return r;
}

}  // namespace fracwave
