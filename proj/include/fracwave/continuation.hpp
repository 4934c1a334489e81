#pragma once

#include <string>
#include <vector>

#include "fracwave/wave_solver.hpp"

namespace fracwave {

enum class ContinuationParameter { Speed, Offset, Amplitude };

std::string to_string(ContinuationParameter p);

struct ContinuationConfig {
    double initial_step = 0.02;
    double min_step = 1e-7;
    double max_step = 0.5;
    double grow = 1.3;
    int fast_iterations = 3;  ///< grow the step when Newton needs at most this many
    SolverConfig solver;
};

struct Branch {
    std::vector<TravelingWave> points;
    ContinuationParameter parameter = ContinuationParameter::Speed;
    std::vector<double> step_history;  ///< accepted step lengths
    std::vector<double> arclength;     ///< cumulative, one per point
    std::string termination = "completed";
};

/// Pseudo-arclength continuation (Speed/Offset) or natural continuation in the
/// amplitude with c free.  `direction` is +1 or -1 on the chosen parameter.
Branch continue_branch(const TravelingWave& start, ContinuationParameter parameter, int direction,
                       int steps, const ContinuationConfig& cfg = {});

/// Follow the speed branch (a fixed) until c reaches target_speed, then solve there.
TravelingWave continue_to_speed(const TravelingWave& start, double target_speed,
                                const ContinuationConfig& cfg = {}, int max_steps = 5000);

/// Same along the offset (c fixed).
TravelingWave continue_to_offset(const TravelingWave& start, double target_offset,
                                 const ContinuationConfig& cfg = {}, int max_steps = 5000);

/// H^{alpha/2}-type weights for cosine coefficients: int (u^2 + |Lambda^{alpha/2} u|^2) = sum w_k b_k^2.
std::vector<double> coefficient_weights(const Grid& grid, double alpha);

}  // namespace fracwave
