#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "saddleflow/diagnostics.hpp"
#include "saddleflow/errors.hpp"
#include "saddleflow/experiments.hpp"
#include "saddleflow/tikhonov_path.hpp"

namespace saddleflow {

inline constexpr const char* kToolVersion = "0.1.0";

using nlohmann::json;

/// Malformed input file (syntax or schema).
class ParseError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Number formatting
// ---------------------------------------------------------------------------

/// 17 significant digits: round-trips every double.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// FNV-1a, 64-bit.
inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// ---------------------------------------------------------------------------
// Scenario <-> JSON
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed) ok = ok || it.key() == key;
        if (!ok) throw ParameterError(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
    }
}

inline const json& require(const json& obj, const std::string& where, const char* key) {
    if (!obj.is_object()) throw ParameterError(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParameterError(where.empty() ? key : where + "." + key, "missing required field");
    return *it;
}

inline double number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ParameterError(field, "expected a number");
    return v.get<double>();
}

inline std::uint64_t unsigned_int(const json& v, const std::string& field) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw ParameterError(field, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

inline Vector vector_of(const json& v, const std::string& field) {
    if (!v.is_array()) throw ParameterError(field, "expected an array of numbers");
    Vector out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

template <class T>
void optional_number(const json& obj, const std::string& where, const char* key, T& target) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if constexpr (std::is_floating_point_v<T>) {
        target = number(*it, where + "." + key);
    } else {
        target = static_cast<T>(unsigned_int(*it, where + "." + key));
    }
}

} // namespace detail

inline json to_json(const RegressionConfig& cfg) {
    return {{"kind", "regression"}, {"m", cfg.m},         {"n", cfg.n},
            {"lambda", cfg.lambda}, {"a", cfg.a},         {"kappa", cfg.kappa},
            {"sigma_max", cfg.sigma_max}, {"seed", cfg.seed}};
}

inline json to_json(const ProblemRef& ref) {
    if (std::holds_alternative<Example1Ref>(ref)) return {{"kind", "example1"}};
    if (const auto* q = std::get_if<QuadraticRef>(&ref)) return {{"kind", "quadratic"}, {"shift", q->shift}, {"m", q->m}};
    return to_json(std::get<RegressionConfig>(ref));
}

inline json to_json(const DynamicsParams& p) {
    const auto* pl = std::get_if<PowerLaw>(&p.beta);
    if (pl == nullptr) throw ParameterError("params.beta", "custom scaling cannot be serialized");
    return {{"alpha", p.alpha}, {"q", p.q}, {"p", p.p}, {"c", p.c}, {"beta", {{"r", pl->r}}}, {"t0", p.t0}};
}

inline json to_json(const IntegratorConfig& c) {
    return {{"rel_tol", c.rel_tol}, {"abs_tol", c.abs_tol}, {"h_init", c.h_init},
            {"h_min", c.h_min},     {"h_max", c.h_max},     {"t_end", c.t_end},
            {"sample_count", c.sample_count}, {"sampling", c.sampling == Sampling::log ? "log" : "linear"}};
}

inline json to_json(const Scenario& s) {
    json j{{"name", s.name},
           {"problem", to_json(s.problem)},
           {"params", to_json(s.params)},
           {"integrator", to_json(s.integrator)},
           {"outputs", s.outputs}};
    if (s.initial) {
        j["initial"] = {{"x", s.initial->x}, {"y", s.initial->y}, {"vx", s.initial->vx}, {"vy", s.initial->vy}};
    }
    return j;
}

inline ProblemRef problem_from_json(const json& j) {
    const std::string kind_field = "problem.kind";
    const json& kind = detail::require(j, "problem", "kind");
    if (!kind.is_string()) throw ParameterError(kind_field, "expected a string");
    const std::string k = kind.get<std::string>();
    if (k == "example1") {
        detail::reject_unknown_keys(j, "problem", {"kind"});
        return Example1Ref{};
    }
    if (k == "quadratic") {
        detail::reject_unknown_keys(j, "problem", {"kind", "shift", "m"});
        QuadraticRef q;
        q.shift = detail::vector_of(detail::require(j, "problem", "shift"), "problem.shift");
        detail::optional_number(j, "problem", "m", q.m);
        return q;
    }
    if (k == "regression") {
        detail::reject_unknown_keys(j, "problem", {"kind", "m", "n", "lambda", "a", "kappa", "sigma_max", "seed"});
        RegressionConfig cfg;
        detail::optional_number(j, "problem", "m", cfg.m);
        detail::optional_number(j, "problem", "n", cfg.n);
        detail::optional_number(j, "problem", "lambda", cfg.lambda);
        detail::optional_number(j, "problem", "a", cfg.a);
        detail::optional_number(j, "problem", "kappa", cfg.kappa);
        detail::optional_number(j, "problem", "sigma_max", cfg.sigma_max);
        detail::optional_number(j, "problem", "seed", cfg.seed);
        try {
            cfg.validate();
        } catch (const ParameterError& e) {
            throw ParameterError("problem." + e.field(), e.message());
        }
        return cfg;
    }
    throw ParameterError(kind_field, "unknown problem kind '" + k + "' (expected example1, quadratic, regression)");
}

inline DynamicsParams params_from_json(const json& j) {
    detail::reject_unknown_keys(j, "params", {"alpha", "q", "p", "c", "beta", "t0"});
    DynamicsParams p;
    p.alpha = detail::number(detail::require(j, "params", "alpha"), "params.alpha");
    p.q = detail::number(detail::require(j, "params", "q"), "params.q");
    p.p = detail::number(detail::require(j, "params", "p"), "params.p");
    p.c = detail::number(detail::require(j, "params", "c"), "params.c");
    const json& beta = detail::require(j, "params", "beta");
    detail::reject_unknown_keys(beta, "params.beta", {"r"});
    p.beta = PowerLaw{detail::number(detail::require(beta, "params.beta", "r"), "params.beta.r")};
    detail::optional_number(j, "params", "t0", p.t0);
    try {
        p.validate();
    } catch (const ParameterError& e) {
        throw ParameterError("params." + e.field(), e.message());
    }
    return p;
}

inline IntegratorConfig integrator_from_json(const json& j) {
    detail::reject_unknown_keys(j, "integrator",
                                {"rel_tol", "abs_tol", "h_init", "h_min", "h_max", "t_end", "sample_count", "sampling"});
    IntegratorConfig c;
    c.t_end = detail::number(detail::require(j, "integrator", "t_end"), "integrator.t_end");
    detail::optional_number(j, "integrator", "rel_tol", c.rel_tol);
    detail::optional_number(j, "integrator", "abs_tol", c.abs_tol);
    detail::optional_number(j, "integrator", "h_init", c.h_init);
    detail::optional_number(j, "integrator", "h_min", c.h_min);
    detail::optional_number(j, "integrator", "h_max", c.h_max);
    detail::optional_number(j, "integrator", "sample_count", c.sample_count);
    if (auto it = j.find("sampling"); it != j.end()) {
        if (*it == "log") {
            c.sampling = Sampling::log;
        } else if (*it == "linear") {
            c.sampling = Sampling::linear;
        } else {
            throw ParameterError("integrator.sampling", "expected \"log\" or \"linear\"");
        }
    }
    return c;
}

inline Scenario scenario_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("scenario must be a JSON object");
    detail::reject_unknown_keys(j, "", {"name", "problem", "params", "initial", "integrator", "outputs"});
    Scenario s;
    if (auto it = j.find("name"); it != j.end()) {
        if (!it->is_string()) throw ParameterError("name", "expected a string");
        s.name = it->get<std::string>();
    }
    s.problem = problem_from_json(detail::require(j, "", "problem"));
    s.params = params_from_json(detail::require(j, "", "params"));
    s.integrator = integrator_from_json(detail::require(j, "", "integrator"));
    if (auto it = j.find("initial"); it != j.end()) {
        detail::reject_unknown_keys(*it, "initial", {"x", "y", "vx", "vy"});
        SimState st;
        st.t = s.params.t0;
        st.x = detail::vector_of(detail::require(*it, "initial", "x"), "initial.x");
        st.y = detail::vector_of(detail::require(*it, "initial", "y"), "initial.y");
        st.vx = detail::vector_of(detail::require(*it, "initial", "vx"), "initial.vx");
        st.vy = detail::vector_of(detail::require(*it, "initial", "vy"), "initial.vy");
        s.initial = std::move(st);
    }
    if (auto it = j.find("outputs"); it != j.end()) {
        if (!it->is_array()) throw ParameterError("outputs", "expected an array of series names");
        s.outputs.clear();
        for (const auto& o : *it) {
            if (!o.is_string()) throw ParameterError("outputs", "expected series names as strings");
            s.outputs.push_back(o.get<std::string>());
        }
    }
    return s;
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Accepts a scenario or a run manifest (which embeds its scenario).
inline Scenario load_scenario_json(const json& j) {
    if (j.is_object() && j.contains("scenario") && j.contains("scenario_digest")) return scenario_from_json(j["scenario"]);
    return scenario_from_json(j);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    return load_scenario_json(parse_json_text(read_text_file(path), path.string()));
}

/// Digest over the canonical (sorted-key) serialization.
inline std::string scenario_digest(const Scenario& s) { return "fnv1a64:" + hex64(fnv1a64(to_json(s).dump())); }

// ---------------------------------------------------------------------------
// Regression instance files
// ---------------------------------------------------------------------------

inline json regression_instance_to_json(const RegressionInstance& inst) {
    json j = to_json(inst.config);
    j["kind"] = "regression_instance";
    j["K"] = inst.K.data();
    j["b"] = inst.b;
    return j;
}

inline RegressionInstance regression_instance_from_json(const json& j) {
    detail::reject_unknown_keys(j, "instance", {"kind", "m", "n", "lambda", "a", "kappa", "sigma_max", "seed", "K", "b"});
    RegressionConfig cfg;
    cfg.m = detail::unsigned_int(detail::require(j, "instance", "m"), "instance.m");
    cfg.n = detail::unsigned_int(detail::require(j, "instance", "n"), "instance.n");
    cfg.lambda = detail::number(detail::require(j, "instance", "lambda"), "instance.lambda");
    cfg.a = detail::number(detail::require(j, "instance", "a"), "instance.a");
    cfg.kappa = detail::number(detail::require(j, "instance", "kappa"), "instance.kappa");
    cfg.sigma_max = detail::number(detail::require(j, "instance", "sigma_max"), "instance.sigma_max");
    cfg.seed = detail::unsigned_int(detail::require(j, "instance", "seed"), "instance.seed");
    cfg.validate();
    Matrix k(cfg.m, cfg.n, detail::vector_of(detail::require(j, "instance", "K"), "instance.K"));
    Vector b = detail::vector_of(detail::require(j, "instance", "b"), "instance.b");
    ProblemSpec problem = regression_saddle_problem(cfg, k, b);
    return {cfg, std::move(k), std::move(b), std::move(problem)};
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string trajectory_csv(const Trajectory& traj, std::size_t n, std::size_t m) {
    std::string out = "t";
    for (std::size_t i = 1; i <= n; ++i) out += ",x_" + std::to_string(i);
    for (std::size_t i = 1; i <= m; ++i) out += ",y_" + std::to_string(i);
    for (std::size_t i = 1; i <= n; ++i) out += ",vx_" + std::to_string(i);
    for (std::size_t i = 1; i <= m; ++i) out += ",vy_" + std::to_string(i);
    out += '\n';
    for (const SimState& s : traj.samples) {
        out += format_double(s.t);
        for (const Vector* v : {&s.x, &s.y, &s.vx, &s.vy}) {
            for (double e : *v) {
                out += ',';
                out += format_double(e);
            }
        }
        out += '\n';
    }
    return out;
}

inline std::string series_csv(const ScenarioResult& r) {
    std::string out = "t";
    for (const auto& name : r.series_names) out += "," + name;
    out += '\n';
    for (std::size_t k = 0; k < r.trajectory.samples.size(); ++k) {
        out += format_double(r.trajectory.samples[k].t);
        for (const auto& col : r.series) {
            out += ',';
            out += format_double(col[k]);
        }
        out += '\n';
    }
    return out;
}

inline std::string path_csv(const std::vector<PathPoint>& path) {
    std::string out = "epsilon";
    const std::size_t dim = path.empty() ? 0 : path.front().z.size();
    for (std::size_t i = 1; i <= dim; ++i) out += ",z_" + std::to_string(i);
    out += ",grad_norm\n";
    for (const PathPoint& pt : path) {
        out += format_double(pt.epsilon);
        for (double e : pt.z) {
            out += ',';
            out += format_double(e);
        }
        out += ',' + format_double(pt.grad_norm) + '\n';
    }
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::vector<double> column(const std::string& name) const {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] != name) continue;
            std::vector<double> col;
            col.reserve(rows.size());
            for (const auto& r : rows) col.push_back(r[j]);
            return col;
        }
        throw DataError("CSV has no column '" + name + "'");
    }
};

inline CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(s);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!s.empty() && s.back() == ',') cells.emplace_back();
        return cells;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw DataError("CSV line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " fields");
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (end == c.c_str() || *end != '\0') {
                throw DataError("CSV line " + std::to_string(line_no) + ": '" + c + "' is not a number");
            }
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw DataError("CSV is empty");
    return table;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json to_json(const ConditionResult& c) {
    json j{{"name", c.name}, {"statement", c.statement}, {"status", to_string(c.status)},
           {"sampled", c.sampled}, {"detail", c.detail}};
    j["threshold_t"] = c.threshold_t ? json(*c.threshold_t) : json(nullptr);
    return j;
}

inline json to_json(const AssumptionReport& rep) {
    json conds = json::array();
    for (const ConditionResult* c : rep.conditions()) conds.push_back(to_json(*c));
    return {{"conditions", conds}, {"witness_M", rep.witness_M}, {"sampled", rep.sampled}, {"regimes", rep.regimes()}};
}

inline json to_json(const LyapunovAudit& a) {
    return {{"t_start", a.t_start},
            {"pairs_checked", a.pairs_checked},
            {"max_excess", a.max_excess},
            {"worst_t", a.worst_t},
            {"max_relative_increase", a.max_relative_increase},
            {"passed", a.passed}};
}

inline json to_json(const NamedRateFit& f) {
    return {{"series", f.series},       {"t_a", f.fit.t_a},
            {"t_b", f.fit.t_b},         {"slope", f.fit.slope},
            {"intercept", f.fit.intercept}, {"r_squared", f.fit.r_squared},
            {"points", f.fit.points},   {"floored", f.floored}};
}

/// Choices made for inputs the scenario leaves open; recorded in manifests.
inline std::vector<std::string> artifact_choices(const Scenario& s) {
    std::vector<std::string> notes;
    if (!s.initial) notes.emplace_back("initial state defaulted to zeros with zero velocity at t0");
    if (std::holds_alternative<RegressionConfig>(s.problem)) {
        notes.emplace_back("b drawn standard-normal from the instance seed after K");
        notes.emplace_back("singular values pinned at sigma_max and sigma_max/kappa, log-uniform in between");
    }
    return notes;
}

inline json manifest_json(const Scenario& s, const ScenarioResult& r, double wall_time,
                          const std::vector<std::string>& files) {
    json seeds = json::array();
    if (const auto* cfg = std::get_if<RegressionConfig>(&s.problem)) seeds.push_back(cfg->seed);
    json fits = json::array();
    for (const auto& f : r.rate_fits) fits.push_back(to_json(f));
    return {{"tool", "saddleflow"},
            {"version", kToolVersion},
            {"scenario_digest", scenario_digest(s)},
            {"scenario", to_json(s)},
            {"seeds", seeds},
            {"integrator", to_json(s.integrator)},
            {"wall_time_seconds", wall_time},
            {"outputs", files},
            {"artifact_choices", artifact_choices(s)},
            {"assumptions", to_json(r.assumptions)},
            {"rate_fits", fits},
            {"notes", r.notes},
            {"stats",
             {{"accepted_steps", r.trajectory.accepted_steps},
              {"rejected_steps", r.trajectory.rejected_steps},
              {"rhs_evals", r.trajectory.rhs_evals}}}};
}

/// Writes trajectory.csv, series.csv, problem.json (regression only) and
/// manifest.json into `dir`.
inline std::vector<std::string> write_scenario_outputs(const std::filesystem::path& dir, const Scenario& s,
                                                       const ResolvedProblem& resolved, const ScenarioResult& r,
                                                       double wall_time) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> files{"trajectory.csv", "series.csv"};
    write_text_file(dir / "trajectory.csv", trajectory_csv(r.trajectory, resolved.problem.n, resolved.problem.m));
    write_text_file(dir / "series.csv", series_csv(r));
    if (resolved.regression) {
        write_text_file(dir / "problem.json", regression_instance_to_json(*resolved.regression).dump() + "\n");
        files.emplace_back("problem.json");
    }
    files.emplace_back("manifest.json");
    write_text_file(dir / "manifest.json", manifest_json(s, r, wall_time, files).dump(2) + "\n");
    return files;
}

} // namespace saddleflow
