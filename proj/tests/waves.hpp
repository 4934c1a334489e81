#pragma once

// Test waves that need a few solver steps to set up.

#include <cmath>

#include "fracwave/continuation.hpp"

namespace testwave {

// RLW wave at speed c > 0, built from the KdV wave at (2, 0) through the reduction
// u(x) = (c + 1)/2 w(x / mu), mu^alpha = 2c/(c + 1), then re-solved in the RLW model.
inline fracwave::TravelingWave rlw(double alpha, double c, int n = 128) {
    using namespace fracwave;
    const double T = 2 * kPi / std::pow(1.8, 1.0 / alpha);
    const auto k = galilean_shift(continue_to_speed(small_amplitude_wave(1, T, alpha, 0.3, n), -2.0), 2.0);
    const double mu = std::pow(2 * c / (c + 1), 1 / alpha);
    const Grid g(n, k.params.period * mu);
    WaveParams p;
    p.alpha = alpha;
    p.speed = c;
    p.period = g.period();
    p.model = Model::RLW;
    return newton_solve(RealField(g, std::vector<double>(k.profile.values().begin(), k.profile.values().end())) *
                            ((c + 1) / 2),
                        p);
}

}  // namespace testwave
