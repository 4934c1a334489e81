#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fracwave/errors.hpp"
#include "fracwave/variational.hpp"
#include "helpers.hpp"

using namespace fracwave;
using ref::pi;

namespace {

double energy_KP(const RealField& u, double alpha) {
    const auto f = functionals_kdv(u, alpha);
    return f.K + f.P;
}

}  // namespace

TEST_CASE("minimizer config validation") {
    MinimizerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.target_U = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidParamsError);
    cfg = {};
    cfg.step = -1;
    CHECK_THROWS_AS(cfg.validate(), InvalidParamsError);
}

TEST_CASE("constrained minimizer recovers the normalized wave") {
    for (double alpha : {2.0, 1.0}) {
        const auto w = small_amplitude_wave(1, 2 * pi, alpha, 0.2, 128);
        const auto wn = canonical_normalize(w).first;
        const double T = wn.params.period;
        const Grid g(128, T);
        const auto seed = RealField::from_function(g, [&](double x) { return 1.0 + 0.3 * std::cos(2 * pi * x / T + 0.7); });
        MinimizeTrace tr;
        const auto m = constrained_minimize({}, alpha, T, seed, &tr);
        CHECK(m.converged);
        CHECK(m.params.speed == 1.0);
        CHECK(m.params.offset == 0.0);
        CHECK(tr.stagnated);
        CHECK(tr.iterations < MinimizerConfig{}.max_iter);
        CHECK(orbital_distance(m.profile, wn.profile, 0.0).rho < 1e-8);
        for (std::size_t i = 1; i < tr.energy.size(); ++i)
            CHECK(tr.energy[i] <= tr.energy[i - 1] * (1 + 1e-12));
        CHECK(std::abs(nehari_check(m.profile, alpha).lhs) < 1e-9);
    }
}

TEST_CASE("minimizer keeps even data even") {
    const double T = 6.4;
    const Grid g(64, T);
    const auto seed = RealField::from_function(g, [&](double x) { return 1.0 + 0.4 * std::cos(2 * pi * x / T); });
    MinimizeTrace tr;
    MinimizerConfig cfg;
    cfg.max_iter = 200;
    constrained_minimize(cfg, 2.0, T, seed, &tr);
    CHECK(tr.max_asymmetry < 1e-12);
}

TEST_CASE("minimizer rejects bad input") {
    const Grid g(32, 2 * pi);
    const auto negU = RealField::from_function(g, [](double x) { return -1.0 + 0.1 * std::cos(x); });
    CHECK_THROWS_AS(constrained_minimize({}, 2.0, 2 * pi, negU, nullptr), InvalidParamsError);
    const auto pos = RealField::from_function(g, [](double x) { return 1.0 + 0.1 * std::cos(x); });
    CHECK_THROWS_AS(constrained_minimize({}, 2.0, 3.0, pos, nullptr), GridMismatchError);
    CHECK_THROWS_AS(constrained_minimize({}, 2.5, 2 * pi, pos, nullptr), InvalidParamsError);
}

TEST_CASE("rearrangement") {
    const Grid g(64, 2 * pi);
    SUBCASE("cos with a grid-multiple shift") {
        const auto shifted = RealField::from_function(g, [&](double x) { return std::cos(x + 7 * g.spacing()); });
        const auto r = symmetric_decreasing_rearrangement(shifted);
        const auto c = RealField::from_function(g, [](double x) { return std::cos(x); });
        CHECK(ref::max_diff(r, c) < 1e-14);
    }
    SUBCASE("layout, idempotence and value multiset") {
        std::mt19937_64 rng(5);
        for (int t = 0; t < 100; ++t) {
            const auto f = ref::random_field(g, 8, rng);
            const auto r = symmetric_decreasing_rearrangement(f);
            std::vector<double> a(f.values().begin(), f.values().end()), b(r.values().begin(), r.values().end());
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            CHECK(a == b);
            CHECK(ref::max_diff(symmetric_decreasing_rearrangement(r), r) == 0.0);
            // x = 0, h, -h, 2h, -2h, ... in descending order
            std::vector<double> order{r[0]};
            for (int k = 1; k < 32; ++k) {
                order.push_back(r[k]);
                order.push_back(r[64 - k]);
            }
            order.push_back(r[32]);
            CHECK(std::is_sorted(order.rbegin(), order.rend()));
            CHECK(functionals_kdv(r, 2.0).K <= functionals_kdv(f, 2.0).K * (1 + 1e-12));
        }
    }
}

TEST_CASE("Nehari identity along dilations of the wave") {
    const double alpha = 1.5;
    const auto wn = canonical_normalize(small_amplitude_wave(1, 2 * pi, alpha, 0.2, 128)).first;
    const double KP = energy_KP(wn.profile, alpha);
    const auto at = nehari_check(wn.profile, alpha);
    CHECK(std::abs(at.lhs) < 1e-9);
    CHECK(at.E == doctest::Approx(KP / 3).epsilon(1e-9));
    for (double b : {0.5, 0.9, 1.3, 2.0}) {
        const auto n = nehari_check(wn.profile * b, alpha);
        CHECK(n.lhs == doctest::Approx(2 * b * b * (1 - b) * KP).epsilon(1e-8));
    }
    const auto z = nehari_check(RealField::zero(wn.profile.grid()), alpha);
    CHECK(z.lhs == 0.0);
    CHECK(z.E == 0.0);
}

TEST_CASE("coercivity probe") {
    const auto w = small_amplitude_wave(1, 2 * pi, 2.0, 0.2, 64);
    const double eps = 0.01 * sobolev_norm(w.profile, 1.0);
    const auto r = coercivity_probe(w, 200, eps, 2024);
    CHECK(r.num_samples == 200);
    CHECK(r.ratios.size() + r.num_skipped + r.num_excluded == 200);
    CHECK(r.min_ratio > 0.0);
    CHECK(!r.violation);
    CHECK(r.norm == "H^{alpha/2}");
    CHECK(r.rng_seed == 2024);
    CHECK(r.min_ratio == *std::min_element(r.ratios.begin(), r.ratios.end()));
    const auto again = coercivity_probe(w, 200, eps, 2024);
    CHECK(again.ratios == r.ratios);
    CHECK_THROWS_AS(coercivity_probe(w, 0, eps, 1), InvalidParamsError);
    CHECK_THROWS_AS(coercivity_probe(w, 10, 10.0, 1), InvalidParamsError);
}
