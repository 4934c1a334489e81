#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fracwave/persistence.hpp"
#include "fracwave/runner.hpp"

namespace fs = std::filesystem;
using namespace fracwave;

namespace {

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() / ("fracwave_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }

    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(dir / name) << text;
        return dir / name;
    }
};

int cli(const std::string& args) {
    const std::string cmd = std::string("\"") + FRACWAVE_CLI + "\" " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> cols;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cols.push_back(cell);
        if (line.back() == ',') cols.push_back("");
        rows.push_back(cols);
    }
    return rows;
}

const char* kSolve = "[wave]\nalpha = 2.0\nperiod_pi = 2\namplitude = 0.1\npoints = 64\n";

const char* kSweep3x3 =
    "[wave]\nperiod_pi = 2\namplitude = 0.5\npoints = 64\n"
    "[sweep]\nalpha = [0.6, 1.0, 2.0]\npower = [1, 2, 3]\npipeline = \"classify\"\n"
    "[classify]\nscan = false\n";

}  // namespace

TEST_CASE("solve writes a one-point branch") {
    Workspace ws;
    const auto cfg = ws.write("solve.toml", kSolve);
    REQUIRE(cli("solve --config " + cfg.string() + " --out " + (ws.dir / "out").string()) == 0);
    const auto b = branch_from_json(read_text_file(ws.dir / "out" / "branch.json"));
    REQUIRE(b.points.size() == 1);
    CHECK(b.points[0].residual_norm < 1e-12);
    CHECK(b.points[0].params.alpha == 2.0);
}

TEST_CASE("config errors exit with 2 and write nothing") {
    Workspace ws;
    const auto out = ws.dir / "out";
    for (const std::string text : {"[wave]\nalpha = \n", "[wave]\ncolour = 3\n", "[wave]\npoints = \"many\"\n"}) {
        const auto cfg = ws.write("bad.toml", text);
        CHECK(cli("solve --config " + cfg.string() + " --out " + out.string()) == 2);
        CHECK((!fs::exists(out) || fs::is_empty(out)));
    }
    CHECK(cli("solve --config " + (ws.dir / "missing.toml").string()) == 2);
    CHECK(cli("frobnicate") == 2);
}

TEST_CASE("sweep with one invalid cell") {
    Workspace ws;
    const auto cfg = ws.write("sweep.toml", kSweep3x3);
    REQUIRE(cli("sweep --config " + cfg.string() + " --out " + (ws.dir / "a").string()) == 0);
    const auto rows = csv_rows(read_text_file(ws.dir / "a" / "sweep.csv"));
    REQUIRE(rows.size() == 9);
    int ok = 0;
    for (const auto& r : rows) {
        if (r[5] == "ok") {
            ++ok;
        } else {
            CHECK(r[1] == "0.6");
            CHECK(r[3] == "3");
            CHECK(!r.back().empty());
        }
    }
    CHECK(ok == 8);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i][0] == std::to_string(i));

    SUBCASE("worker count does not change the output") {
        REQUIRE(cli("sweep --config " + cfg.string() + " --workers 3 --out " + (ws.dir / "b").string()) == 0);
        CHECK(read_text_file(ws.dir / "a" / "sweep.csv") == read_text_file(ws.dir / "b" / "sweep.csv"));
    }
    SUBCASE("existing outputs need --force") {
        const auto before = read_text_file(ws.dir / "a" / "sweep.csv");
        CHECK(cli("sweep --config " + cfg.string() + " --out " + (ws.dir / "a").string()) == 2);
        CHECK(read_text_file(ws.dir / "a" / "sweep.csv") == before);
        CHECK(cli("sweep --config " + cfg.string() + " --force --out " + (ws.dir / "a").string()) == 0);
    }
}

TEST_CASE("a one-cell sweep agrees with classify") {
    const std::string wave = "[wave]\nalpha = 1.5\nperiod_pi = 2\namplitude = 0.3\npoints = 64\n[classify]\nscan = false\n";
    const auto cfg = load_experiment_config(wave, "classify");
    const auto verdict = classify(build_wave(cfg.wave), [] {
        ClassifyOptions o;
        o.run_scan = false;
        return o;
    }());
    const auto sweep_cfg = load_experiment_config(wave + "[sweep]\nalpha = [1.5]\npipeline = \"classify\"\n", "sweep");
    const auto table = run_sweep(sweep_cfg, 1);
    REQUIRE(table.rows.size() == 1);
    const auto& r = table.rows[0];
    CHECK(r.ok);
    CHECK(r.classification == to_string(verdict.classification));
    CHECK(r.P_c == verdict.P_c);
    CHECK(r.n_minus_L == verdict.n_minus_L);

    Workspace ws;
    const auto f = ws.write("c.toml", wave);
    REQUIRE(cli("classify --config " + f.string() + " --out " + ws.dir.string()) == 0);
    const auto v2 = verdict_from_json(read_text_file(ws.dir / "verdict.json"));
    CHECK(v2.classification == verdict.classification);
    CHECK(v2.P_c == verdict.P_c);
}

TEST_CASE("long and short period waves classify as stable") {
    const auto cfg = load_experiment_config(
        "[wave]\namplitude = 0.5\npoints = 128\n"
        "[sweep]\nalpha = [0.6, 1.0, 2.0]\nperiod_pi = [2, 8]\npipeline = \"classify\"\n[classify]\nscan = false\n",
        "sweep");
    const auto t = run_sweep(cfg, 2);
    REQUIRE(t.rows.size() == 6);
    for (const auto& r : t.rows) {
        CHECK(r.ok);
        CHECK(r.classification == "stable_full");
        CHECK(r.n_minus_L == 1);
    }
}

TEST_CASE("in-process commands report through the streams") {
    Workspace ws;
    const auto cfg = ws.write("solve.toml", kSolve);
    RunFlags flags;
    flags.config = cfg;
    flags.out = ws.dir / "o";
    std::ostringstream out, err;
    CHECK(run_command("solve", flags, out, err) == 0);
    CHECK(out.str().find("status=ok") != std::string::npos);
    std::ostringstream out2, err2;
    CHECK(run_command("solve", flags, out2, err2) == 2);
    CHECK(!err2.str().empty());
    flags.force = true;
    std::ostringstream out3, err3;
    CHECK(run_command("solve", flags, out3, err3) == 0);
}
