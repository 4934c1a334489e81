#pragma once

// Config-driven pipelines behind the fracwave command line, and the parallel sweep.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fracwave/config.hpp"
#include "fracwave/persistence.hpp"

namespace fracwave {

struct WaveSpec {
    Model model = Model::KdV;
    double alpha = 2.0;
    double period = 2.0 * kPi;
    int power = 1;
    int points = 128;
    int mode = 1;
    double amplitude = 0.05;
    std::optional<double> speed;
    std::optional<double> offset;
    std::string seed = "bifurcation";  ///< bifurcation | unit_speed | solitary
};

struct ExperimentConfig {
    std::string command;
    WaveSpec wave;
    SolverConfig solver;

    std::string branch_parameter = "amplitude";
    int branch_direction = 1;
    int branch_steps = 10;
    double branch_initial_step = 0.02;
    double branch_max_step = 0.5;

    std::string sector = "full";
    int eigenfunctions = 6;
    bool projected = false;

    bool scan = true;
    double mu_min = 1e-3, mu_max = 1e2;
    int mu_count = 40;
    bool variational = false;

    double t_final = 10.0;
    double dt = 1e-3;
    int samples = 200;
    double perturbation = 0.0;  ///< 0: evolve the wave itself
    bool constrain = true;
    int k_max = 0;
    double translation = 0.0;

    std::vector<double> sweep_alpha, sweep_period, sweep_amplitude;
    std::vector<int> sweep_power;
    std::string pipeline = "classify";
    long long max_cells = 10000;

    std::vector<double> report_periods, report_offsets;
    std::vector<int> report_points;

    std::uint64_t seed = 1;
    int workers = 1;
    std::filesystem::path out = ".";
};

/// Schema-validates the text for one command; throws ConfigError.
ExperimentConfig load_experiment_config(const std::string& text, const std::string& command);

/// Builds and converges the wave described by the spec (throws on failure).
TravelingWave build_wave(const WaveSpec& spec, const SolverConfig& solver = {});

struct SweepRow {
    std::size_t cell = 0;
    double alpha = 0.0, period = 0.0, amplitude = 0.0;
    int power = 1;
    bool ok = false;
    std::string classification;
    int n_minus_L = 0, n_minus_projected = 0;
    double P_c = 0.0, determinant = 0.0, residual = 0.0;
    double sup_ratio = 0.0, drift = 0.0;
    std::string consistency;
    std::string error;
};

struct SweepTable {
    std::string pipeline;
    std::uint64_t seed = 0;
    std::vector<SweepRow> rows;  ///< ordered by cell index
};

SweepTable run_sweep(const ExperimentConfig& cfg, int workers);
std::string sweep_to_csv(const SweepTable& table);

struct RunFlags {
    std::filesystem::path config;
    std::optional<std::filesystem::path> out;
    bool force = false;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
};

/// Exit code 0 on success, 1 on computation failure, 2 on config or usage error.
int run_command(const std::string& command, const RunFlags& flags, std::ostream& out, std::ostream& err);

}  // namespace fracwave
