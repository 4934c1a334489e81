#include "fracwave/persistence.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "fracwave/errors.hpp"

namespace fracwave {

using json = nlohmann::json;

namespace {

json num(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

double get_num(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw ParseError("expected a number, got '" + s + "'", 0);
    }
    return j.get<double>();
}

json nums(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

std::vector<double> get_nums(const json& j) {
    std::vector<double> v;
    v.reserve(j.size());
    for (const auto& x : j) v.push_back(get_num(x));
    return v;
}

json header(const std::string& kind) { return {{"schema_version", kSchemaVersion}, {"kind", kind}}; }

// Parses and checks the envelope; JSON syntax errors carry the byte offset.
json parse_document(const std::string& text, const std::string& kind) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
    }
    if (!j.is_object() || !j.contains("schema_version")) throw ParseError("missing schema_version", 0);
    const int v = j.at("schema_version").get<int>();
    if (v != kSchemaVersion) {
        throw SchemaVersionError("schema_version " + std::to_string(v) + " cannot be read by this build (expects " +
                                 std::to_string(kSchemaVersion) + "); re-run the producing command to migrate");
    }
    if (j.value("kind", std::string()) != kind) throw ParseError("expected a '" + kind + "' document", 0);
    return j;
}

template <class F>
auto guarded(F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid document structure: ") + e.what(), 0);
    }
}

json field_json(const RealField& f) {
    return {{"points", f.grid().num_points()}, {"period", num(f.grid().period())}, {"values", nums({f.values().begin(), f.values().end()})}};
}

RealField field_from(const json& j) {
    const Grid g(j.at("points").get<int>(), get_num(j.at("period")));
    auto v = get_nums(j.at("values"));
    if (static_cast<int>(v.size()) != g.num_points()) throw ParseError("field length does not match its grid", 0);
    return RealField(g, std::move(v));
}

json wave_json(const TravelingWave& w) {
    const auto& p = w.params;
    return {{"model", to_string(p.model)},
            {"alpha", num(p.alpha)},
            {"speed", num(p.speed)},
            {"offset", num(p.offset)},
            {"period", num(p.period)},
            {"power", p.power},
            {"profile", field_json(w.profile)},
            {"residual_norm", num(w.residual_norm)},
            {"branch_id", w.branch_id},
            {"converged", w.converged},
            {"iterations", w.iterations},
            {"resolved", w.resolved},
            {"message", w.message}};
}

TravelingWave wave_from(const json& j) {
    WaveParams p;
    p.model = model_from_string(j.at("model").get<std::string>());
    p.alpha = get_num(j.at("alpha"));
    p.speed = get_num(j.at("speed"));
    p.offset = get_num(j.at("offset"));
    p.period = get_num(j.at("period"));
    p.power = j.at("power").get<int>();
    TravelingWave w{field_from(j.at("profile")), p, 0.0, {}, false, 0, true, {}};
    w.residual_norm = get_num(j.at("residual_norm"));
    w.branch_id = j.at("branch_id").get<std::string>();
    w.converged = j.at("converged").get<bool>();
    w.iterations = j.at("iterations").get<int>();
    w.resolved = j.at("resolved").get<bool>();
    w.message = j.at("message").get<std::string>();
    return w;
}

ContinuationParameter parameter_from(const std::string& s) {
    for (auto p : {ContinuationParameter::Speed, ContinuationParameter::Offset, ContinuationParameter::Amplitude})
        if (to_string(p) == s) return p;
    throw ParseError("unknown continuation parameter '" + s + "'", 0);
}

json jacobian_json(const ParameterJacobian& J) {
    json mask = json::array();
    for (bool b : J.failure_mask) mask.push_back(b);
    return {{"M_a", num(J.M_a)},
            {"P_a", num(J.P_a)},
            {"M_c", num(J.M_c)},
            {"P_c", num(J.P_c)},
            {"fd_step", num(J.fd_step)},
            {"determinant", num(J.determinant)},
            {"symmetry_defect", num(J.symmetry_defect)},
            {"failure_mask", mask},
            {"complete", J.complete}};
}

ParameterJacobian jacobian_from(const json& j) {
    ParameterJacobian J;
    J.M_a = get_num(j.at("M_a"));
    J.P_a = get_num(j.at("P_a"));
    J.M_c = get_num(j.at("M_c"));
    J.P_c = get_num(j.at("P_c"));
    J.fd_step = get_num(j.at("fd_step"));
    J.determinant = get_num(j.at("determinant"));
    J.symmetry_defect = get_num(j.at("symmetry_defect"));
    for (const auto& b : j.at("failure_mask")) J.failure_mask.push_back(b.get<bool>());
    J.complete = j.at("complete").get<bool>();
    return J;
}

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string branch_to_json(const Branch& b) {
    json j = header("branch");
    j["parameter"] = to_string(b.parameter);
    j["termination"] = b.termination;
    j["step_history"] = nums(b.step_history);
    j["arclength"] = nums(b.arclength);
    json pts = json::array();
    for (const auto& w : b.points) pts.push_back(wave_json(w));
    j["points"] = pts;
    return j.dump(1) + "\n";
}

Branch branch_from_json(const std::string& text, std::optional<int> target_points) {
    const json j = parse_document(text, "branch");
    Branch b = guarded([&] {
        Branch r;
        r.parameter = parameter_from(j.at("parameter").get<std::string>());
        r.termination = j.at("termination").get<std::string>();
        r.step_history = get_nums(j.at("step_history"));
        r.arclength = get_nums(j.at("arclength"));
        for (const auto& p : j.at("points")) r.points.push_back(wave_from(p));
        return r;
    });
    if (target_points) {
        for (auto& w : b.points) {
            const RealField u = resample(w.profile, *target_points);
            w.profile = u;
            w.residual_norm = l2_norm(residual(u, w.params));
        }
    }
    return b;
}

std::string spectrum_to_json(const SpectrumReport& r) {
    json j = header("spectrum");
    j["sector"] = to_string(r.sector);
    j["eigenvalues"] = nums(r.eigenvalues);
    j["n_minus"] = r.n_minus;
    j["kernel_dim"] = r.kernel_dim;
    j["zero_tol"] = num(r.zero_tol);
    j["marginal"] = r.marginal;
    json ef = json::array();
    for (const auto& f : r.eigenfunctions) ef.push_back(field_json(f));
    j["eigenfunctions"] = ef;
    return j.dump(1) + "\n";
}

SpectrumReport spectrum_from_json(const std::string& text) {
    const json j = parse_document(text, "spectrum");
    return guarded([&] {
        SpectrumReport r;
        r.sector = sector_from_string(j.at("sector").get<std::string>());
        r.eigenvalues = get_nums(j.at("eigenvalues"));
        r.n_minus = j.at("n_minus").get<int>();
        r.kernel_dim = j.at("kernel_dim").get<int>();
        r.zero_tol = get_num(j.at("zero_tol"));
        r.marginal = j.at("marginal").get<bool>();
        for (const auto& f : j.at("eigenfunctions")) r.eigenfunctions.push_back(field_from(f));
        return r;
    });
}

std::string verdict_to_json(const StabilityVerdict& v) {
    json j = header("verdict");
    j["classification"] = to_string(v.classification);
    j["n_minus_L"] = v.n_minus_L;
    j["n_minus_projected"] = v.n_minus_projected;
    j["kernel_dim"] = v.kernel_dim;
    j["P_c_sign"] = v.P_c_sign;
    j["P_c"] = num(v.P_c);
    j["P_c_constrained"] = num(v.P_c_constrained);
    j["jacobian"] = jacobian_json(v.jacobian);
    j["criteria_fired"] = v.criteria_fired;
    if (v.growing_mode) {
        j["growing_mode"] = {{"mu", num(v.growing_mode->mu)}, {"mode", field_json(v.growing_mode->mode)}};
    } else {
        j["growing_mode"] = nullptr;
    }
    j["zero_tol"] = num(v.zero_tol);
    j["det_tol"] = num(v.det_tol);
    j["certificate_min"] = num(v.certificate_min);
    j["exploratory"] = v.exploratory;
    j["diagnostics"] = v.diagnostics;
    return j.dump(1) + "\n";
}

StabilityVerdict verdict_from_json(const std::string& text) {
    const json j = parse_document(text, "verdict");
    return guarded([&] {
        StabilityVerdict v;
        try {
            v.classification = classification_from_string(j.at("classification").get<std::string>());
        } catch (const SchemaVersionError& e) {
            throw ParseError(e.what(), 0);
        }
        v.n_minus_L = j.at("n_minus_L").get<int>();
        v.n_minus_projected = j.at("n_minus_projected").get<int>();
        v.kernel_dim = j.at("kernel_dim").get<int>();
        v.P_c_sign = j.at("P_c_sign").get<int>();
        v.P_c = get_num(j.at("P_c"));
        v.P_c_constrained = get_num(j.at("P_c_constrained"));
        v.jacobian = jacobian_from(j.at("jacobian"));
        v.criteria_fired = j.at("criteria_fired").get<std::vector<std::string>>();
        const auto& gm = j.at("growing_mode");
        if (!gm.is_null()) v.growing_mode = GrowingMode{get_num(gm.at("mu")), field_from(gm.at("mode"))};
        v.zero_tol = get_num(j.at("zero_tol"));
        v.det_tol = get_num(j.at("det_tol"));
        v.certificate_min = get_num(j.at("certificate_min"));
        v.exploratory = j.at("exploratory").get<bool>();
        v.diagnostics = j.at("diagnostics").get<std::string>();
        return v;
    });
}

std::string coercivity_to_json(const CoercivityReport& r) {
    json j = header("coercivity");
    j["num_samples"] = r.num_samples;
    j["num_skipped"] = r.num_skipped;
    j["num_excluded"] = r.num_excluded;
    j["min_ratio"] = num(r.min_ratio);
    j["eps"] = num(r.eps);
    j["rng_seed"] = r.rng_seed;
    j["norm"] = r.norm;
    j["violation"] = r.violation;
    j["ratios"] = nums(r.ratios);
    return j.dump(1) + "\n";
}

CoercivityReport coercivity_from_json(const std::string& text) {
    const json j = parse_document(text, "coercivity");
    return guarded([&] {
        CoercivityReport r;
        r.num_samples = j.at("num_samples").get<int>();
        r.num_skipped = j.at("num_skipped").get<int>();
        r.num_excluded = j.at("num_excluded").get<int>();
        r.min_ratio = get_num(j.at("min_ratio"));
        r.eps = get_num(j.at("eps"));
        r.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        r.norm = j.at("norm").get<std::string>();
        r.violation = j.at("violation").get<bool>();
        r.ratios = get_nums(j.at("ratios"));
        return r;
    });
}

std::string limit_report_to_json(const LimitReport& r) {
    json j = header("limit_report");
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"period", num(row.period)},
                        {"speed", num(row.speed)},
                        {"offset", num(row.offset)},
                        {"M_a", num(row.M_a)},
                        {"M_c", num(row.M_c)},
                        {"P_c", num(row.P_c)},
                        {"determinant", num(row.determinant)},
                        {"identity_defect", num(row.identity_defect)},
                        {"n_minus_L", row.n_minus_L},
                        {"n_minus_projected", row.n_minus_projected},
                        {"resolved", row.resolved},
                        {"flag", row.flag}});
    }
    j["rows"] = rows;
    j["max_identity_defect"] = num(r.max_identity_defect);
    j["ma_negative"] = r.ma_negative;
    j["indices_one_at_largest"] = r.indices_one_at_largest;
    j["pc_positive"] = r.pc_positive;
    return j.dump(1) + "\n";
}

std::string trace_to_csv(const EvolutionTrace& t) {
    std::ostringstream os;
    os << "# schema_version=" << kSchemaVersion << "\n";
    os << "# kind=trace\n";
    os << "# scheme=" << t.scheme << "\n";
    os << "# dt=" << format_double(t.dt) << "\n";
    os << "# blowup=" << (t.blowup ? 1 : 0) << "\n";
    os << "# accuracy_warning=" << (t.accuracy_warning ? 1 : 0) << "\n";
    os << "# max_relative_drift=" << format_double(t.max_relative_drift) << "\n";
    os << "# final_values=";
    for (std::size_t i = 0; i < t.final_values.size(); ++i) os << (i ? " " : "") << format_double(t.final_values[i]);
    os << "\n";
    os << "t,H,K,U,P,M,rho,x_star\n";
    for (std::size_t i = 0; i < t.times.size(); ++i) {
        const auto& f = t.invariants[i];
        os << format_double(t.times[i]) << ',' << format_double(f.H) << ',' << format_double(f.K) << ','
           << format_double(f.U) << ',' << format_double(f.P) << ',' << format_double(f.M) << ','
           << format_double(t.orbital_distance[i]) << ',' << format_double(t.shift[i]) << "\n";
    }
    return os.str();
}

namespace {

double parse_double(const std::string& s, std::size_t offset) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ParseError("bad number '" + s + "'", offset);
    return x;
}

}  // namespace

EvolutionTrace trace_from_csv(const std::string& text) {
    EvolutionTrace t;
    std::size_t pos = 0;
    bool have_header = false, have_version = false;
    while (pos < text.size()) {
        const std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) throw ParseError("truncated trace: last line has no newline", pos);
        const std::string line = text.substr(pos, eol - pos);
        const std::size_t at = pos;
        pos = eol + 1;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(2, eq - 2), val = line.substr(eq + 1);
            if (key == "schema_version") {
                const int v = std::stoi(val);
                if (v != kSchemaVersion)
                    throw SchemaVersionError("trace schema_version " + val + " cannot be read by this build");
                have_version = true;
            } else if (key == "scheme") {
                t.scheme = val;
            } else if (key == "dt") {
                t.dt = parse_double(val, at);
            } else if (key == "blowup") {
                t.blowup = val == "1";
            } else if (key == "accuracy_warning") {
                t.accuracy_warning = val == "1";
            } else if (key == "max_relative_drift") {
                t.max_relative_drift = parse_double(val, at);
            } else if (key == "final_values") {
                std::istringstream is(val);
                std::string tok;
                while (is >> tok) t.final_values.push_back(parse_double(tok, at));
            }
            continue;
        }
        if (!have_header) {
            if (line != "t,H,K,U,P,M,rho,x_star") throw ParseError("unexpected trace header", at);
            have_header = true;
            continue;
        }
        std::vector<double> cols;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cols.push_back(parse_double(line.substr(start, comma - start), at + start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cols.size() != 8) throw ParseError("trace row has " + std::to_string(cols.size()) + " columns", at);
        t.times.push_back(cols[0]);
        FunctionalValues f;
        f.H = cols[1], f.K = cols[2], f.U = cols[3], f.P = cols[4], f.M = cols[5];
        t.invariants.push_back(f);
        t.orbital_distance.push_back(cols[6]);
        t.shift.push_back(cols[7]);
    }
    if (!have_version) throw ParseError("trace is missing schema_version", 0);
    if (!have_header) throw ParseError("trace is missing its column header", text.size());
    return t;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text, bool force) {
    if (std::filesystem::exists(path) && !force)
        throw ConfigError("refusing to overwrite " + path.string() + " (pass --force)");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

}  // namespace fracwave
