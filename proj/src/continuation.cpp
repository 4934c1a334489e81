#include "fracwave/continuation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>

#include "fracwave/errors.hpp"

namespace fracwave {

std::string to_string(ContinuationParameter p) {
    switch (p) {
        case ContinuationParameter::Speed: return "speed";
        case ContinuationParameter::Offset: return "offset";
        case ContinuationParameter::Amplitude: return "amplitude";
    }
    return "?";
}

std::vector<double> coefficient_weights(const Grid& grid, double alpha) {
    const int h = grid.num_modes();
    const DispersionSymbol sym{alpha};
    std::vector<double> w(h);
    for (int k = 0; k < h; ++k) {
        const double base = (k == 0 || k == h - 1) ? grid.period() : 0.5 * grid.period();
        w[k] = base * (1.0 + sym(grid.wavenumber(k)));
    }
    return w;
}

namespace {

struct State {
    Eigen::VectorXd b;
    double theta = 0.0;
};

double& param_ref(WaveParams& p, FreeParameter f) { return f == FreeParameter::Speed ? p.speed : p.offset; }
double param_of(const WaveParams& p, FreeParameter f) { return f == FreeParameter::Speed ? p.speed : p.offset; }

State state_of(const TravelingWave& w, FreeParameter f) {
    const auto b = cosine_coefficients(w.profile);
    return {Eigen::Map<const Eigen::VectorXd>(b.data(), b.size()), param_of(w.params, f)};
}

// Pseudo-arclength stepper with secant tangents.
class ArclengthStepper {
public:
    ArclengthStepper(const TravelingWave& start, FreeParameter free, int direction,
                     const ContinuationConfig& cfg)
        : free_(free), cfg_(cfg), current_(start), ds_(cfg.initial_step) {
        const auto w = coefficient_weights(start.profile.grid(), start.params.alpha);
        weights_ = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
        z_ = state_of(start, free);
        State t;
        try {
            const auto db = parameter_derivative(start, free, cfg.solver);
            t.b = Eigen::Map<const Eigen::VectorXd>(db.data(), db.size());
        } catch (const BifurcationPointError&) {
            t.b = Eigen::VectorXd::Zero(z_.b.size());
        }
        t.theta = 1.0;
        const double nt = norm(t);
        t.b *= direction / nt;
        t.theta *= direction / nt;
        tangent_ = t;
    }

    double norm(const State& s) const {
        return std::sqrt(s.b.cwiseProduct(s.b).dot(weights_) + s.theta * s.theta);
    }

    // Returns the next accepted wave, or nullopt when the step underflows.
    std::optional<TravelingWave> step() {
        SolverConfig scfg = cfg_.solver;
        scfg.max_iter = std::min(scfg.max_iter, 15);
        while (ds_ >= cfg_.min_step) {
            State zp{z_.b + ds_ * tangent_.b, z_.theta + ds_ * tangent_.theta};
            WaveParams params = current_.params;
            param_ref(params, free_) = zp.theta;
            const Grid& g = current_.profile.grid();
            RealField seed = from_cosine_coefficients(g, std::vector<double>(zp.b.data(), zp.b.data() + zp.b.size()));
            LinearConstraint con;
            con.weights.resize(zp.b.size());
            for (int k = 0; k < zp.b.size(); ++k) con.weights[k] = weights_[k] * tangent_.b[k];
            con.param_weight = tangent_.theta;
            con.target = zp.b.cwiseProduct(tangent_.b).dot(weights_) + zp.theta * tangent_.theta;
            std::optional<TravelingWave> trial;
            try {
                trial = newton_solve_constrained(seed, params, free_, con, scfg);
            } catch (const BifurcationPointError&) {
                trial.reset();
            }
            if (trial && trial->converged) {
                State zn = state_of(*trial, free_);
                State diff{zn.b - z_.b, zn.theta - z_.theta};
                const double dist = norm(diff);
                if (dist > 0.0 && dist <= 2.0 * ds_) {
                    tangent_ = {diff.b / dist, diff.theta / dist};
                    z_ = zn;
                    current_ = *trial;
                    last_step_ = dist;
                    if (trial->iterations <= cfg_.fast_iterations) ds_ = std::min(ds_ * cfg_.grow, cfg_.max_step);
                    return trial;
                }
            }
            ds_ *= 0.5;
        }
        return std::nullopt;
    }

    double last_step() const { return last_step_; }
    double step_size() const { return ds_; }
    void set_step_size(double ds) { ds_ = ds; }

private:
    FreeParameter free_;
    ContinuationConfig cfg_;
    TravelingWave current_;
    Eigen::VectorXd weights_;
    State z_;
    State tangent_;
    double ds_;
    double last_step_ = 0.0;
};

Branch amplitude_branch(const TravelingWave& start, int direction, int steps,
                        const ContinuationConfig& cfg) {
    Branch br;
    br.parameter = ContinuationParameter::Amplitude;
    br.points.push_back(start);
    br.arclength.push_back(0.0);
    double ds = cfg.initial_step;
    int accepted = 0;
    while (accepted < steps) {
        if (ds < cfg.min_step) {
            br.termination = "step underflow";
            break;
        }
        const TravelingWave& prev = br.points.back();
        const double target = wave_amplitude(prev.profile) + direction * ds;
        std::optional<TravelingWave> trial;
        try {
            trial = solve_at_amplitude(prev.profile, prev.params, target, FreeParameter::Speed, cfg.solver);
        } catch (const BifurcationPointError&) {
            trial.reset();
        }
        if (!trial || !trial->converged) {
            ds *= 0.5;
            continue;
        }
        const double dc = trial->params.speed - prev.params.speed;
        const double dist = std::sqrt(std::pow(sobolev_norm(trial->profile - prev.profile, 0.5 * prev.params.alpha), 2) + dc * dc);
        if (dist > cfg.max_step) {
            ds *= 0.5;
            continue;
        }
        trial->branch_id = start.branch_id;
        br.points.push_back(*trial);
        br.step_history.push_back(dist);
        br.arclength.push_back(br.arclength.back() + dist);
        ++accepted;
        if (trial->iterations <= cfg.fast_iterations) ds = std::min(ds * cfg.grow, cfg.max_step);
    }
    return br;
}

TravelingWave continue_to_target(const TravelingWave& start, FreeParameter free, double target,
                                 const ContinuationConfig& cfg, int max_steps) {
    const double theta0 = param_of(start.params, free);
    if (theta0 == target) return start;
    const int dir = target > theta0 ? 1 : -1;
    ArclengthStepper stepper(start, free, dir, cfg);
    TravelingWave prev = start;
    for (int i = 0; i < max_steps; ++i) {
        auto next = stepper.step();
        if (!next) break;
        const double a = param_of(prev.params, free), b = param_of(next->params, free);
        if ((a - target) * (b - target) <= 0.0) {
            // Interpolate between the bracketing points and solve at the target.
            const double s = (target - a) / (b - a);
            auto bp = cosine_coefficients(prev.profile);
            const auto bn = cosine_coefficients(next->profile);
            for (std::size_t k = 0; k < bp.size(); ++k) bp[k] += s * (bn[k] - bp[k]);
            WaveParams params = next->params;
            param_ref(params, free) = target;
            auto w = newton_solve(from_cosine_coefficients(start.profile.grid(), bp), params, cfg.solver);
            w.branch_id = start.branch_id;
            return w;
        }
        prev = *next;
    }
    TravelingWave fail = prev;
    fail.converged = false;
    fail.message = "continuation did not reach the target parameter";
    return fail;
}

}  // namespace

Branch continue_branch(const TravelingWave& start, ContinuationParameter parameter, int direction,
                       int steps, const ContinuationConfig& cfg) {
    if (!start.converged) throw InvalidParamsError("continue_branch needs a converged start");
    direction = direction >= 0 ? 1 : -1;
    if (parameter == ContinuationParameter::Amplitude) return amplitude_branch(start, direction, steps, cfg);

    Branch br;
    br.parameter = parameter;
    br.points.push_back(start);
    br.arclength.push_back(0.0);
    if (steps <= 0) return br;
    const FreeParameter free = parameter == ContinuationParameter::Speed ? FreeParameter::Speed : FreeParameter::Offset;
    ArclengthStepper stepper(start, free, direction, cfg);
    for (int i = 0; i < steps; ++i) {
        auto next = stepper.step();
        if (!next) {
            br.termination = "step underflow";
            break;
        }
        next->branch_id = start.branch_id;
        br.points.push_back(*next);
        br.step_history.push_back(stepper.last_step());
        br.arclength.push_back(br.arclength.back() + stepper.last_step());
    }
    return br;
}

TravelingWave continue_to_speed(const TravelingWave& start, double target_speed,
                                const ContinuationConfig& cfg, int max_steps) {
    return continue_to_target(start, FreeParameter::Speed, target_speed, cfg, max_steps);
}

TravelingWave continue_to_offset(const TravelingWave& start, double target_offset,
                                 const ContinuationConfig& cfg, int max_steps) {
    return continue_to_target(start, FreeParameter::Offset, target_offset, cfg, max_steps);
}

}  // namespace fracwave
