#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fracwave/errors.hpp"
#include "fracwave/evolution.hpp"
#include "helpers.hpp"
#include "waves.hpp"

using namespace fracwave;
using ref::pi;

namespace {

RealField smooth_data(const Grid& g, double beta = 0.0) {
    return RealField::from_function(g, [&](double x) {
        return beta + 0.3 * std::cos(x) + 0.1 * std::sin(2 * x + 0.4) + 0.02 * std::cos(3 * x - 1.0);
    });
}

RealField final_state(const EvolutionTrace& tr, const Grid& g) { return RealField(g, tr.final_values); }

TravelingWave p5_wave() {
    const int p = 5;
    const double T = 20.0;
    const Grid g(128, T);
    const auto seed = RealField::from_function(g, [&](double x) {
        const double y = x < T / 2 ? x : x - T;
        const double s = 1 / std::cosh(p * y / 2);
        return std::pow((p + 2) / 2.0 * s * s, 1.0 / p);
    });
    WaveParams wp;
    wp.period = T;
    wp.power = p;
    return newton_solve(seed, wp);
}

}  // namespace

TEST_CASE("zero data stay zero") {
    const Grid g(64, 2 * pi);
    const auto tr = evolve_nonlinear(RealField::zero(g), {}, 1.0, 1e-2);
    CHECK(final_state(tr, g).max_abs() == 0.0);
    CHECK(!tr.blowup);
    CHECK(tr.scheme == "etdrk4");
}

TEST_CASE("a traveling wave is transported at its speed") {
    const auto w = small_amplitude_wave(1, 2 * pi, 2.0, 0.2, 64);
    EvolveOptions eo;
    eo.reference = w.profile;
    eo.samples = 20;
    const double t = 2.0;
    const auto tr = evolve_nonlinear(w.profile, {2.0, Model::KdV, 1}, t, 1e-3, eo);
    const auto u = final_state(tr, w.profile.grid());
    CHECK(ref::max_diff(u, translate(w.profile, w.params.speed * t)) < 1e-9);
    CHECK(*std::max_element(tr.orbital_distance.begin(), tr.orbital_distance.end()) < 1e-9);
    const double slope = (tr.shift.back() - tr.shift.front()) / (tr.times.back() - tr.times.front());
    CHECK(slope == doctest::Approx(w.params.speed).epsilon(1e-8));
    CHECK(tr.max_relative_drift < 1e-10);
}

TEST_CASE("Galilean invariance of the flow") {
    const Grid g(64, 2 * pi);
    const double beta = 0.4, t = 1.0;
    const FlowParams flow{1.5, Model::KdV, 1};
    const auto a = final_state(evolve_nonlinear(smooth_data(g), flow, t, 1e-3), g);
    const auto b = final_state(evolve_nonlinear(smooth_data(g, beta), flow, t, 1e-3), g);
    CHECK(ref::max_diff(b, translate(a, 2 * beta * t) + beta) < 1e-8);
}

TEST_CASE("ETDRK4 is fourth order in time") {
    const Grid g(64, 2 * pi);
    const FlowParams flow{2.0, Model::KdV, 1};
    const auto u0 = smooth_data(g);
    const auto exact = final_state(evolve_nonlinear(u0, flow, 0.5, 1.25e-3), g);
    std::vector<double> err;
    for (double dt : {2e-2, 1e-2, 5e-3}) err.push_back(ref::max_diff(final_state(evolve_nonlinear(u0, flow, 0.5, dt), g), exact));
    CHECK(err[0] / err[1] > 8);
    CHECK(err[1] / err[2] > 8);
}

TEST_CASE("RLW flow conserves its invariants") {
    const auto w = testwave::rlw(2.0, 2.0, 64);
    REQUIRE(w.converged);
    const Grid& g = w.profile.grid();
    const auto u0 = w.profile + RealField::from_function(g, [&](double x) { return 0.01 * std::cos(4 * pi * x / g.period()); });
    const auto tr = evolve_nonlinear(u0, {2.0, Model::RLW, 1}, 2.0, 1e-3);
    CHECK(tr.scheme == "rk4");
    CHECK(tr.max_relative_drift < 1e-9);
    EvolveOptions eo;
    eo.reference = w.profile;
    const auto tw = evolve_nonlinear(w.profile, {2.0, Model::RLW, 1}, 1.0, 1e-3, eo);
    CHECK(*std::max_element(tw.orbital_distance.begin(), tw.orbital_distance.end()) < 1e-9);
}

TEST_CASE("orbital distance") {
    const auto w = small_amplitude_wave(1, 2 * pi, 2.0, 0.2, 64);
    const double T = w.params.period;
    for (double d : {0.3, 1.7, 5.0}) {
        const auto od = orbital_distance(translate(w.profile, d), w.profile, 1.0);
        CHECK(od.rho < 1e-10);
        CHECK(od.x_star == doctest::Approx(d).epsilon(1e-8));
    }
    CHECK(orbital_distance(w.profile, w.profile, 0.0).rho < 1e-14);
    // against a nearby field the distance is at most the perturbation size
    const auto phi = RealField::from_function(w.profile.grid(), [&](double x) { return std::sin(3 * 2 * pi * x / T); });
    for (double eps : {1e-4, 1e-5}) {
        const auto od = orbital_distance(w.profile + phi * eps, w.profile, 1.0);
        CHECK(od.rho <= eps * sobolev_norm(phi, 1.0) * (1 + 1e-8));
        CHECK(od.rho >= 0.9 * eps * sobolev_norm(phi, 1.0));
    }
}

TEST_CASE("level-set projection") {
    const auto w = small_amplitude_wave(1, 2 * pi, 2.0, 0.2, 64);
    const auto f = functionals_kdv(w.profile, 2.0);
    RandomStream rng(9, 0);
    const auto phi = random_band_limited(w.profile.grid(), 8, rng);
    const auto p = project_to_level_set(w.profile + phi * 1e-3, w.profile, f.P, f.M, Model::KdV, 2.0);
    REQUIRE(p.has_value());
    const auto fp = functionals_kdv(*p, 2.0);
    CHECK(fp.P == doctest::Approx(f.P).epsilon(1e-12));
    CHECK(fp.M == doctest::Approx(f.M).epsilon(1e-12));
}

TEST_CASE("perturbation experiments around a stable wave") {
    const auto w = small_amplitude_wave(1, 2 * pi, 2.0, 0.2, 64);
    PerturbationSpec spec;
    spec.expected = Classification::StableFull;
    spec.k_max = 8;
    for (bool con : {true, false}) {
        spec.constrain_PM = con;
        const auto r = perturbation_experiment(w, spec, 10.0);
        CHECK(!r.projection_failed);
        CHECK(!r.blowup);
        CHECK(r.initial_rho > 0);
        CHECK(r.sup_ratio < 50);
        CHECK(r.drift < 1e-7);
        if (con) CHECK(r.consistency == "consistent");
    }
    spec.translation = 0.01;
    spec.constrain_PM = false;
    // a pure translate sits on the orbit and stays there
    const auto r = perturbation_experiment(w, spec, 10.0);
    CHECK(r.initial_rho < 1e-12);
    CHECK(r.sup_rho < 1e-9);
}

TEST_CASE("linearized flow") {
    const auto w = small_amplitude_wave(1, 2 * pi, 2.0, 0.3, 64);
    SUBCASE("u_x is neutral") {
        const auto run = evolve_linearized(w, differentiate(w.profile), 5.0, 1e-3);
        for (double n : run.norms) CHECK(n == doctest::Approx(run.norms.front()).epsilon(1e-8));
    }
    SUBCASE("random data do not grow about a stable wave") {
        RandomStream rng(7, 0);
        auto v0 = remove_secular_components(w, random_band_limited(w.profile.grid(), 16, rng));
        CHECK(std::abs(inner(v0, w.profile)) < 1e-12 * l2_norm(v0));
        CHECK(std::abs(mean(v0)) < 1e-12 * l2_norm(v0));
        const auto run = evolve_linearized(w, v0 * (1 / l2_norm(v0)), 20.0, 1e-3);
        CHECK(run.growth_rate < 1e-3);
    }
}

TEST_CASE("linearized growth matches the growing mode") {
    const auto w = p5_wave();
    REQUIRE(w.converged);
    const auto scan = growing_mode_scan(w, log_grid(1e-2, 10, 25));
    REQUIRE(scan.growing_mode.has_value());
    RandomStream rng(3, 0);
    const auto v0 = remove_secular_components(w, random_band_limited(w.profile.grid(), 32, rng));
    const auto run = evolve_linearized(w, v0 * (1e-3 / l2_norm(v0)), 20.0, 1e-3);
    CHECK(run.growth_rate == doctest::Approx(scan.growing_mode->mu).epsilon(0.05));
}

TEST_CASE("blow-up is flagged") {
    const Grid g(64, 2 * pi);
    const auto u0 = RealField::from_function(g, [](double x) { return 3.0 * std::exp(-4 * (x - pi) * (x - pi)); });
    const auto tr = evolve_nonlinear(u0, {2.0, Model::KdV, 5}, 5.0, 1e-2);
    CHECK(tr.blowup);
}

TEST_CASE("augmented energy is stationary at the wave") {
    const auto w = small_amplitude_wave(1, 2 * pi, 1.5, 0.2, 64);
    const auto phi = RealField::from_function(w.profile.grid(), [](double x) { return std::cos(2 * x); });
    const double e0 = augmented_energy(w.profile, w.params);
    for (double h : {1e-3, 1e-4}) {
        const double d = (augmented_energy(w.profile + phi * h, w.params) - augmented_energy(w.profile - phi * h, w.params)) / (2 * h);
        CHECK(std::abs(d) < 1e-7);
    }
    CHECK(std::isfinite(e0));
}
