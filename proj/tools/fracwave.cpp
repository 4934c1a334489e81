#include <CLI11.hpp>
#include <iostream>

#include "fracwave/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Periodic traveling waves of fractional KdV-type equations: solve, continue, classify, evolve."};
    app.require_subcommand(1);

    const char* commands[][2] = {
        {"solve", "Newton solve one wave; writes branch.json"},
        {"branch", "Continue a branch; writes branch.json"},
        {"spectrum", "Second-variation spectrum; writes spectrum.json"},
        {"classify", "Stability verdict; writes verdict.json"},
        {"evolve", "Time-step the wave or a perturbation of it; writes trace.csv"},
        {"sweep", "Parallel parameter sweep; writes sweep.csv"},
        {"report", "Long-period diagnostics at unit speed; writes report.json"},
    };
    fracwave::RunFlags flags;
    std::string out_dir;
    int workers = 0;
    std::uint64_t seed = 0;
    std::vector<CLI::App*> subs;
    for (auto& c : commands) {
        auto* sub = app.add_subcommand(c[0], c[1]);
        sub->add_option("--config", flags.config, "Config file (TOML subset)")->required();
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_flag("--force", flags.force, "Overwrite existing outputs");
        sub->add_option("--workers", workers, "Worker threads for sweeps")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "Random seed");
        subs.push_back(sub);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    std::string command;
    for (auto* s : subs) {
        if (s->parsed()) command = s->get_name();
        if (s->parsed() && s->count("--out")) flags.out = out_dir;
        if (s->parsed() && s->count("--workers")) flags.workers = workers;
        if (s->parsed() && s->count("--seed")) flags.seed = seed;
    }
    return fracwave::run_command(command, flags, std::cout, std::cerr);
}
