#include "fracwave/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

#include "fracwave/errors.hpp"

namespace fracwave {

namespace {

using Kind = ConfigValue::Kind;

const std::vector<std::string> kCommands = {"solve", "branch", "spectrum", "classify", "evolve", "sweep", "report"};

std::vector<KeySpec> schema_for(const std::string& command) {
    std::vector<KeySpec> s = {
        {"wave.model", Kind::String},      {"wave.alpha", Kind::Number},   {"wave.period", Kind::Number},
        {"wave.period_pi", Kind::Number},  {"wave.power", Kind::Integer},  {"wave.points", Kind::Integer},
        {"wave.mode", Kind::Integer},      {"wave.amplitude", Kind::Number}, {"wave.speed", Kind::Number},
        {"wave.offset", Kind::Number},     {"wave.seed", Kind::String},    {"solver.tol", Kind::Number},
        {"solver.max_iter", Kind::Integer}, {"run.seed", Kind::Integer},   {"run.out", Kind::String},
        {"run.workers", Kind::Integer},
    };
    auto add = [&](std::initializer_list<KeySpec> more) { s.insert(s.end(), more); };
    const std::vector<KeySpec> classify = {{"classify.scan", Kind::Bool},        {"classify.mu_min", Kind::Number},
                                           {"classify.mu_max", Kind::Number},    {"classify.mu_count", Kind::Integer},
                                           {"classify.variational", Kind::Bool}};
    const std::vector<KeySpec> evolve = {{"evolve.t_final", Kind::Number},     {"evolve.dt", Kind::Number},
                                         {"evolve.samples", Kind::Integer},    {"evolve.perturbation", Kind::Number},
                                         {"evolve.constrain", Kind::Bool},     {"evolve.k_max", Kind::Integer},
                                         {"evolve.translation", Kind::Number}};
    if (command == "branch") {
        add({{"branch.parameter", Kind::String},
             {"branch.direction", Kind::Integer},
             {"branch.steps", Kind::Integer},
             {"branch.initial_step", Kind::Number},
             {"branch.max_step", Kind::Number}});
    } else if (command == "spectrum") {
        add({{"spectrum.sector", Kind::String}, {"spectrum.eigenfunctions", Kind::Integer}, {"spectrum.projected", Kind::Bool}});
    } else if (command == "classify") {
        s.insert(s.end(), classify.begin(), classify.end());
    } else if (command == "evolve") {
        s.insert(s.end(), evolve.begin(), evolve.end());
        s.insert(s.end(), classify.begin(), classify.end());
    } else if (command == "sweep") {
        s.insert(s.end(), classify.begin(), classify.end());
        s.insert(s.end(), evolve.begin(), evolve.end());
        add({{"sweep.alpha", Kind::Array, Kind::Number},
             {"sweep.period", Kind::Array, Kind::Number},
             {"sweep.period_pi", Kind::Array, Kind::Number},
             {"sweep.power", Kind::Array, Kind::Integer},
             {"sweep.amplitude", Kind::Array, Kind::Number},
             {"sweep.pipeline", Kind::String},
             {"sweep.max_cells", Kind::Integer}});
    } else if (command == "report") {
        add({{"report.periods_pi", Kind::Array, Kind::Number},
             {"report.points", Kind::Array, Kind::Integer},
             {"report.offsets", Kind::Array, Kind::Number}});
    }
    return s;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

std::string output_name(const std::string& command) {
    if (command == "solve" || command == "branch") return "branch.json";
    if (command == "spectrum") return "spectrum.json";
    if (command == "classify") return "verdict.json";
    if (command == "evolve") return "trace.csv";
    if (command == "sweep") return "sweep.csv";
    return "report.json";
}

std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
    return s;
}

StabilityVerdict classify_with(const TravelingWave& w, const ExperimentConfig& cfg) {
    ClassifyOptions o;
    o.run_scan = cfg.scan;
    o.variational_provenance = cfg.variational;
    if (cfg.scan) o.mu_grid = log_grid(cfg.mu_min, cfg.mu_max, cfg.mu_count);
    return classify(w, o);
}

PerturbationSpec perturbation_from(const ExperimentConfig& cfg, std::uint64_t stream) {
    PerturbationSpec p;
    p.amplitude = cfg.perturbation;
    p.constrain_PM = cfg.constrain;
    p.k_max = cfg.k_max;
    p.seed = cfg.seed;
    p.stream = stream;
    p.dt = cfg.dt;
    p.translation = cfg.translation;
    return p;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& text, const std::string& command) {
    if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
        throw ConfigError("unknown command '" + command + "'");
    const ConfigDoc d = parse_config(text);
    validate_config(d, schema_for(command));

    ExperimentConfig c;
    c.command = command;
    auto& w = c.wave;
    try {
        w.model = model_from_string(d.string("wave.model", "kdv"));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("wave.model: ") + e.what());
    }
    w.alpha = d.number("wave.alpha", w.alpha);
    require(!(d.has("wave.period") && d.has("wave.period_pi")), "give wave.period or wave.period_pi, not both");
    if (d.has("wave.period")) w.period = d.number("wave.period", w.period);
    if (d.has("wave.period_pi")) w.period = kPi * d.number("wave.period_pi", 2.0);
    w.power = static_cast<int>(d.integer("wave.power", w.power));
    w.points = static_cast<int>(d.integer("wave.points", w.points));
    w.mode = static_cast<int>(d.integer("wave.mode", w.mode));
    w.amplitude = d.number("wave.amplitude", w.amplitude);
    if (d.has("wave.speed")) w.speed = d.number("wave.speed", 0.0);
    if (d.has("wave.offset")) w.offset = d.number("wave.offset", 0.0);
    w.seed = d.string("wave.seed", w.seed);
    require(w.seed == "bifurcation" || w.seed == "unit_speed" || w.seed == "solitary",
            "wave.seed must be bifurcation, unit_speed or solitary");
    require(w.points >= 8 && w.points % 2 == 0, "wave.points must be even and >= 8");
    require(w.period > 0.0, "wave.period must be positive");
    require(w.mode >= 1, "wave.mode must be >= 1");
    require(w.seed != "solitary" || w.speed, "wave.seed = solitary needs wave.speed");

    c.solver.tol = d.number("solver.tol", c.solver.tol);
    c.solver.max_iter = static_cast<int>(d.integer("solver.max_iter", c.solver.max_iter));
    require(c.solver.tol > 0.0 && c.solver.max_iter > 0, "solver.tol and solver.max_iter must be positive");

    c.branch_parameter = d.string("branch.parameter", c.branch_parameter);
    require(c.branch_parameter == "speed" || c.branch_parameter == "offset" || c.branch_parameter == "amplitude",
            "branch.parameter must be speed, offset or amplitude");
    c.branch_direction = static_cast<int>(d.integer("branch.direction", c.branch_direction));
    c.branch_steps = static_cast<int>(d.integer("branch.steps", c.branch_steps));
    c.branch_initial_step = d.number("branch.initial_step", c.branch_initial_step);
    c.branch_max_step = d.number("branch.max_step", c.branch_max_step);
    require(c.branch_steps >= 0 && c.branch_initial_step > 0.0, "branch.steps >= 0 and branch.initial_step > 0");

    c.sector = d.string("spectrum.sector", c.sector);
    try {
        sector_from_string(c.sector);
    } catch (const std::exception&) {
        throw ConfigError("spectrum.sector must be full, even or odd");
    }
    c.eigenfunctions = static_cast<int>(d.integer("spectrum.eigenfunctions", c.eigenfunctions));
    c.projected = d.boolean("spectrum.projected", c.projected);

    c.scan = d.boolean("classify.scan", c.scan);
    c.mu_min = d.number("classify.mu_min", c.mu_min);
    c.mu_max = d.number("classify.mu_max", c.mu_max);
    c.mu_count = static_cast<int>(d.integer("classify.mu_count", c.mu_count));
    c.variational = d.boolean("classify.variational", c.variational);
    require(c.mu_min > 0.0 && c.mu_max > c.mu_min && c.mu_count >= 2, "classify mu grid must satisfy 0 < mu_min < mu_max");

    c.t_final = d.number("evolve.t_final", c.t_final);
    c.dt = d.number("evolve.dt", c.dt);
    c.samples = static_cast<int>(d.integer("evolve.samples", c.samples));
    c.perturbation = d.number("evolve.perturbation", c.perturbation);
    c.constrain = d.boolean("evolve.constrain", c.constrain);
    c.k_max = static_cast<int>(d.integer("evolve.k_max", c.k_max));
    c.translation = d.number("evolve.translation", c.translation);
    require(c.t_final > 0.0 && c.dt > 0.0 && c.samples >= 1, "evolve.t_final, evolve.dt and evolve.samples must be positive");
    require(c.perturbation >= 0.0, "evolve.perturbation must be >= 0");

    c.sweep_alpha = d.numbers("sweep.alpha");
    require(!(d.has("sweep.period") && d.has("sweep.period_pi")), "give sweep.period or sweep.period_pi, not both");
    c.sweep_period = d.numbers("sweep.period");
    for (double p : d.numbers("sweep.period_pi")) c.sweep_period.push_back(kPi * p);
    for (long long p : d.integers("sweep.power")) c.sweep_power.push_back(static_cast<int>(p));
    c.sweep_amplitude = d.numbers("sweep.amplitude");
    c.pipeline = d.string("sweep.pipeline", c.pipeline);
    require(c.pipeline == "classify" || c.pipeline == "evolve", "sweep.pipeline must be classify or evolve");
    c.max_cells = d.integer("sweep.max_cells", c.max_cells);

    for (double p : d.numbers("report.periods_pi")) c.report_periods.push_back(kPi * p);
    for (long long n : d.integers("report.points")) c.report_points.push_back(static_cast<int>(n));
    c.report_offsets = d.numbers("report.offsets");
    if (command == "report") {
        if (c.report_periods.empty()) c.report_periods = {2 * kPi, 4 * kPi, 8 * kPi, 16 * kPi};
        if (c.report_points.empty()) c.report_points.assign(c.report_periods.size(), w.points);
        if (c.report_offsets.empty()) c.report_offsets.assign(c.report_periods.size(), 0.0);
        require(c.report_points.size() == c.report_periods.size() && c.report_offsets.size() == c.report_periods.size(),
                "report.points and report.offsets must match report.periods_pi in length");
    }

    const long long seed = d.integer("run.seed", 1);
    require(seed >= 0, "run.seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);
    c.workers = static_cast<int>(d.integer("run.workers", 1));
    c.out = d.string("run.out", ".");
    return c;
}

TravelingWave build_wave(const WaveSpec& s, const SolverConfig& solver) {
    WaveParams base;
    base.model = s.model;
    base.alpha = s.alpha;
    base.period = s.period;
    base.power = s.power;
    base.speed = s.speed.value_or(s.model == Model::KdV ? 1.0 : -0.5);
    base.offset = s.offset.value_or(0.0);
    base.validate();
    const Grid g(s.points, s.period);
    std::optional<TravelingWave> out;
    if (s.seed == "unit_speed") {
        if (s.model != Model::KdV || s.power != 1) throw UnsupportedModelError("unit_speed seed needs KdV with p = 1");
        out = unit_speed_wave(s.alpha, s.period, s.offset.value_or(0.0), s.points, solver);
    } else if (s.seed == "solitary") {
        if (s.model != Model::KdV) throw UnsupportedModelError("solitary seed needs the KdV model");
        const double c = *s.speed, p = s.power;
        if (!(c > 0.0)) throw InvalidParamsError("solitary seed needs speed > 0");
        const RealField seed = RealField::from_function(g, [&](double x) {
            const double y = x > 0.5 * s.period ? x - s.period : x;
            const double sech = 1.0 / std::cosh(0.5 * p * std::sqrt(c) * y);
            return std::pow(0.5 * (p + 2.0) * c * sech * sech, 1.0 / p);
        });
        out = newton_solve(seed, base, solver);
    } else {
        const double kxi = 2.0 * kPi * s.mode / s.period;
        if (s.model == Model::KdV && s.power == 1) {
            out = small_amplitude_wave(s.mode, s.period, s.alpha, s.amplitude, s.points, solver);
        } else {
            WaveParams p = base;
            p.offset = 0.0;
            const double lam = std::pow(kxi, s.alpha);
            p.speed = s.model == Model::KdV ? -lam : -1.0 / (1.0 + lam);
            const RealField seed = RealField::from_function(g, [&](double x) { return s.amplitude * std::cos(kxi * x); });
            out = solve_at_amplitude(seed, p, s.amplitude, FreeParameter::Speed, solver);
        }
        TravelingWave& w = *out;
        ContinuationConfig cc;
        cc.solver = solver;
        if (w.converged && s.speed) w = continue_to_speed(w, *s.speed, cc);
        if (w.converged && s.offset && *s.offset != w.params.offset) w = continue_to_offset(w, *s.offset, cc);
    }
    TravelingWave& w = *out;
    if (!w.converged) throw ConstraintViolationError("wave did not converge: " + w.message);
    if (w.branch_id.empty()) w.branch_id = s.seed + "-k" + std::to_string(s.mode);
    return w;
}

SweepTable run_sweep(const ExperimentConfig& cfg, int workers) {
    const auto alphas = cfg.sweep_alpha.empty() ? std::vector<double>{cfg.wave.alpha} : cfg.sweep_alpha;
    const auto periods = cfg.sweep_period.empty() ? std::vector<double>{cfg.wave.period} : cfg.sweep_period;
    const auto powers = cfg.sweep_power.empty() ? std::vector<int>{cfg.wave.power} : cfg.sweep_power;
    const auto amps = cfg.sweep_amplitude.empty() ? std::vector<double>{cfg.wave.amplitude} : cfg.sweep_amplitude;
    const long long cells = static_cast<long long>(alphas.size() * periods.size() * powers.size() * amps.size());
    if (cells > cfg.max_cells)
        throw ConfigError("sweep has " + std::to_string(cells) + " cells, above the cap " + std::to_string(cfg.max_cells));

    SweepTable table;
    table.pipeline = cfg.pipeline;
    table.seed = cfg.seed;
    table.rows.resize(cells);
    std::size_t idx = 0;
    for (double a : alphas)
        for (double T : periods)
            for (int p : powers)
                for (double A : amps) {
                    auto& r = table.rows[idx];
                    r.cell = idx++;
                    r.alpha = a, r.period = T, r.power = p, r.amplitude = A;
                }

    auto work = [&](SweepRow& r) {
        try {
            WaveSpec s = cfg.wave;
            s.alpha = r.alpha, s.period = r.period, s.power = r.power, s.amplitude = r.amplitude;
            const TravelingWave w = build_wave(s, cfg.solver);
            r.residual = w.residual_norm;
            const StabilityVerdict v = classify_with(w, cfg);
            r.classification = to_string(v.classification);
            r.n_minus_L = v.n_minus_L;
            r.n_minus_projected = v.n_minus_projected;
            r.P_c = v.P_c;
            r.determinant = v.jacobian.determinant;
            if (cfg.pipeline == "evolve") {
                PerturbationSpec ps = perturbation_from(cfg, r.cell);
                if (ps.amplitude == 0.0 && ps.translation == 0.0) ps.amplitude = 1e-3 * sobolev_norm(w.profile, 0.5 * s.alpha);
                ps.expected = v.classification;
                const auto rep = perturbation_experiment(w, ps, cfg.t_final);
                r.sup_ratio = rep.sup_ratio;
                r.drift = rep.drift;
                r.consistency = rep.consistency;
            }
            r.ok = true;
        } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
        }
    };

    workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<long long>(1, cells))));
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t i = next++; i < table.rows.size(); i = next++) work(table.rows[i]);
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(loop);
    loop();
    for (auto& th : pool) th.join();
    return table;
}

std::string sweep_to_csv(const SweepTable& t) {
    std::ostringstream os;
    os << "# schema_version=" << kSchemaVersion << "\n# kind=sweep\n# pipeline=" << t.pipeline << "\n# seed=" << t.seed
       << "\n";
    os << "cell,alpha,period,power,amplitude,status,classification,n_minus_L,n_minus_projected,P_c,determinant,"
          "residual,sup_ratio,drift,consistency,error\n";
    for (const auto& r : t.rows) {
        os << r.cell << ',' << format_double(r.alpha) << ',' << format_double(r.period) << ',' << r.power << ','
           << format_double(r.amplitude) << ',' << (r.ok ? "ok" : "failed") << ',' << r.classification << ',';
        if (r.ok) {
            os << r.n_minus_L << ',' << r.n_minus_projected << ',' << format_double(r.P_c) << ','
               << format_double(r.determinant) << ',' << format_double(r.residual) << ',';
            if (t.pipeline == "evolve") os << format_double(r.sup_ratio) << ',' << format_double(r.drift);
            else os << ',';
        } else {
            os << ",,,,,,";
        }
        os << ',' << r.consistency << ',' << csv_safe(r.error) << "\n";
    }
    return os.str();
}

int run_command(const std::string& command, const RunFlags& flags, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg;
    std::filesystem::path target;
    try {
        if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
            throw ConfigError("unknown command '" + command + "'");
        cfg = load_experiment_config(read_text_file(flags.config), command);
        if (flags.out) cfg.out = *flags.out;
        if (flags.seed) cfg.seed = *flags.seed;
        if (flags.workers) cfg.workers = *flags.workers;
        if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
        target = cfg.out / output_name(command);
        if (std::filesystem::exists(target) && !flags.force)
            throw ConfigError("refusing to overwrite " + target.string() + " (pass --force)");
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        out << "fracwave " << command << " status=config_error exit=2\n";
        return 2;
    }

    std::ostringstream summary;
    summary << "fracwave " << command << " status=ok";
    try {
        if (command == "sweep") {
            const SweepTable t = run_sweep(cfg, cfg.workers);
            write_text_file(target, sweep_to_csv(t), flags.force);
            const auto failed = std::count_if(t.rows.begin(), t.rows.end(), [](const SweepRow& r) { return !r.ok; });
            summary << " cells=" << t.rows.size() << " ok=" << t.rows.size() - failed << " failed=" << failed;
        } else if (command == "report") {
            Branch b;
            b.parameter = ContinuationParameter::Speed;
            for (std::size_t i = 0; i < cfg.report_periods.size(); ++i) {
                b.points.push_back(unit_speed_wave(cfg.wave.alpha, cfg.report_periods[i], cfg.report_offsets[i],
                                                   cfg.report_points[i], cfg.solver));
            }
            const LimitReport rep = solitary_limit_report(b);
            write_text_file(target, limit_report_to_json(rep), flags.force);
            summary << " rows=" << rep.rows.size() << " max_identity_defect=" << format_double(rep.max_identity_defect)
                    << " ma_negative=" << rep.ma_negative << " pc_positive=" << rep.pc_positive;
        } else {
            const TravelingWave w = build_wave(cfg.wave, cfg.solver);
            summary << " residual=" << format_double(w.residual_norm) << " speed=" << format_double(w.params.speed)
                    << " offset=" << format_double(w.params.offset);
            if (command == "solve") {
                Branch b;
                b.parameter = ContinuationParameter::Amplitude;
                b.points.push_back(w);
                b.arclength.push_back(0.0);
                write_text_file(target, branch_to_json(b), flags.force);
                summary << " points=1 iterations=" << w.iterations;
            } else if (command == "branch") {
                ContinuationConfig cc;
                cc.solver = cfg.solver;
                cc.initial_step = cfg.branch_initial_step;
                cc.max_step = cfg.branch_max_step;
                const auto param = cfg.branch_parameter == "speed"    ? ContinuationParameter::Speed
                                   : cfg.branch_parameter == "offset" ? ContinuationParameter::Offset
                                                                      : ContinuationParameter::Amplitude;
                const Branch b = continue_branch(w, param, cfg.branch_direction, cfg.branch_steps, cc);
                write_text_file(target, branch_to_json(b), flags.force);
                summary << " points=" << b.points.size() << " termination=\"" << b.termination << "\"";
            } else if (command == "spectrum") {
                LinearOperator L = build_second_variation(w);
                if (cfg.projected) L = project_mean_zero(L);
                const auto rep = eigen_spectrum(L, sector_from_string(cfg.sector), cfg.eigenfunctions);
                write_text_file(target, spectrum_to_json(rep), flags.force);
                summary << " n_minus=" << rep.n_minus << " kernel_dim=" << rep.kernel_dim;
            } else if (command == "classify") {
                const auto v = classify_with(w, cfg);
                write_text_file(target, verdict_to_json(v), flags.force);
                summary << " classification=" << to_string(v.classification) << " n_minus=" << v.n_minus_L
                        << " P_c=" << format_double(v.P_c);
            } else if (command == "evolve") {
                EvolutionTrace tr;
                if (cfg.perturbation > 0.0 || cfg.translation != 0.0) {
                    PerturbationSpec ps = perturbation_from(cfg, 0);
                    ExperimentConfig no_scan = cfg;
                    no_scan.scan = false;
                    ps.expected = classify_with(w, no_scan).classification;
                    const auto rep = perturbation_experiment(w, ps, cfg.t_final);
                    tr = rep.trace;
                    summary << " sup_ratio=" << format_double(rep.sup_ratio) << " consistency=" << rep.consistency;
                } else {
                    EvolveOptions eo;
                    eo.samples = cfg.samples;
                    eo.reference = w.profile;
                    tr = evolve_nonlinear(w.profile, {w.params.alpha, w.params.model, w.params.power}, cfg.t_final,
                                          cfg.dt, eo);
                    double sup = 0.0;
                    for (double r : tr.orbital_distance) sup = std::max(sup, r);
                    summary << " sup_rho=" << format_double(sup);
                }
                write_text_file(target, trace_to_csv(tr), flags.force);
                summary << " drift=" << format_double(tr.max_relative_drift) << " blowup=" << tr.blowup;
            }
        }
    } catch (const std::exception& e) {
        err << "computation failed: " << e.what() << "\n";
        out << "fracwave " << command << " status=failed exit=1\n";
        return 1;
    }
    summary << " out=" << target.string();
    out << summary.str() << "\n";
    return 0;
}

}  // namespace fracwave
