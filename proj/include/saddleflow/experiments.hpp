#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "saddleflow/diagnostics.hpp"
#include "saddleflow/dynamics.hpp"
#include "saddleflow/integrator.hpp"
#include "saddleflow/problem.hpp"

namespace saddleflow {

struct Example1Ref {
    friend bool operator==(const Example1Ref&, const Example1Ref&) = default;
};

struct QuadraticRef {
    Vector shift{1.0, -2.0};
    std::size_t m = 1;
};

using ProblemRef = std::variant<Example1Ref, QuadraticRef, RegressionConfig>;

struct ResolvedProblem {
    ProblemSpec problem;
    std::optional<SaddlePoint> min_norm_saddle;
    std::optional<RegressionInstance> regression;
};

inline ResolvedProblem resolve_problem(const ProblemRef& ref) {
    if (std::holds_alternative<Example1Ref>(ref)) {
        ResolvedProblem r{example1_problem(), std::nullopt, std::nullopt};
        r.min_norm_saddle = origin_saddle(r.problem);
        return r;
    }
    if (const auto* quad = std::get_if<QuadraticRef>(&ref)) {
        if (quad->shift.empty()) throw ParameterError("problem.quadratic.shift", "must be non-empty");
        if (quad->m < 1) throw ParameterError("problem.quadratic.m", "must be >= 1");
        ResolvedProblem r{shifted_quadratic_problem(quad->shift, quad->m), std::nullopt, std::nullopt};
        r.min_norm_saddle = SaddlePoint{quad->shift, Vector(quad->m, 0.0)};
        return r;
    }
    const auto& cfg = std::get<RegressionConfig>(ref);
    cfg.validate();
    RegressionInstance inst = make_regression_instance(cfg);
    ProblemSpec problem = inst.problem;
    return {std::move(problem), std::nullopt, std::move(inst)};
}

// Series a scenario can request. All but vel_norm and phi need a reference
// saddle; phi needs a regression instance.
inline const std::array<std::string, 8>& known_series() {
    static const std::array<std::string, 8> names{"gap", "traj_error", "vel_norm", "E",
                                                  "E_hat", "E_tilde", "phi", "dist_min_norm"};
    return names;
}

struct Scenario {
    std::string name = "scenario";
    ProblemRef problem = Example1Ref{};
    DynamicsParams params;
    std::optional<SimState> initial; // zeros at t0 when absent
    IntegratorConfig integrator;
    std::vector<std::string> outputs{"gap", "traj_error", "vel_norm"};
};

inline SimState initial_state(const Scenario& s, const ProblemSpec& problem) {
    if (s.initial) return *s.initial;
    return SimState::zeros(s.params.t0, problem.n, problem.m);
}

inline void validate_scenario(const Scenario& s, const ResolvedProblem& resolved) {
    s.params.validate(s.integrator.t_end);
    s.integrator.validate(s.params.t0);
    const SimState init = initial_state(s, resolved.problem);
    if (init.t != s.params.t0) throw ParameterError("initial.t", "must equal params.t0");
    if (init.x.size() != resolved.problem.n) throw ParameterError("initial.x", "dimension must be n");
    if (init.y.size() != resolved.problem.m) throw ParameterError("initial.y", "dimension must be m");
    if (init.vx.size() != resolved.problem.n) throw ParameterError("initial.vx", "dimension must be n");
    if (init.vy.size() != resolved.problem.m) throw ParameterError("initial.vy", "dimension must be m");
    for (const std::string& name : s.outputs) {
        const auto& known = known_series();
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            throw ParameterError("outputs", "unknown series '" + name + "'");
        }
        if (name == "phi") {
            if (!resolved.regression) throw ParameterError("outputs", "phi requires a regression problem");
        } else if (name != "vel_norm" && !resolved.min_norm_saddle) {
            throw ParameterError("outputs", "series '" + name + "' needs a known saddle point");
        }
    }
}

/// Value of one named series at a state.
inline double series_value(const std::string& name, const SimState& s, const DynamicsParams& params,
                           const ResolvedProblem& resolved) {
    if (name == "vel_norm") return norm(s.vx) + norm(s.vy);
    if (name == "phi") return primal_objective(*resolved.regression, s.x);
    const SaddlePoint& saddle = *resolved.min_norm_saddle;
    const ProblemSpec& problem = resolved.problem;
    if (name == "gap") return primal_dual_gap(problem, saddle, s.x, s.y);
    if (name == "traj_error") return distance(s.x, saddle.x_star) + distance(s.y, saddle.y_star);
    if (name == "E") return energy_fast(s, params, problem, saddle).total();
    if (name == "E_hat") return energy_slow(s, params, problem, saddle).total();
    if (name == "E_tilde") return energy_strong(s, params, problem, saddle);
    if (name == "dist_min_norm") {
        return std::sqrt(std::pow(distance(s.x, saddle.x_star), 2) + std::pow(distance(s.y, saddle.y_star), 2));
    }
    throw ParameterError("outputs", "unknown series '" + name + "'");
}

struct NamedRateFit {
    std::string series;
    RateFit fit;
    std::size_t floored = 0;
};

struct ScenarioResult {
    std::string name;
    Trajectory trajectory;
    std::vector<std::string> series_names;
    std::vector<std::vector<double>> series; // series[j][k] = series_names[j] at sample k
    std::vector<NamedRateFit> rate_fits;
    AssumptionReport assumptions;
    std::vector<std::string> notes;

    std::vector<double> times() const {
        std::vector<double> t;
        t.reserve(trajectory.samples.size());
        for (const SimState& s : trajectory.samples) t.push_back(s.t);
        return t;
    }

    const std::vector<double>& column(const std::string& name) const {
        for (std::size_t j = 0; j < series_names.size(); ++j) {
            if (series_names[j] == name) return series[j];
        }
        throw ParameterError("series", "result has no series '" + name + "'");
    }
};

/// Recomputes the requested series from a stored trajectory.
inline std::vector<std::vector<double>> compute_series(const Scenario& s, const ResolvedProblem& resolved,
                                                       const Trajectory& traj) {
    std::vector<std::vector<double>> cols(s.outputs.size());
    for (std::size_t j = 0; j < s.outputs.size(); ++j) {
        cols[j].reserve(traj.samples.size());
        for (const SimState& st : traj.samples) cols[j].push_back(series_value(s.outputs[j], st, s.params, resolved));
    }
    return cols;
}

inline ScenarioResult run_scenario(const Scenario& s, const ResolvedProblem& resolved) {
    validate_scenario(s, resolved);
    ScenarioResult result;
    result.name = s.name;
    result.series_names = s.outputs;
    result.series.resize(s.outputs.size());
    result.assumptions = check_assumptions(s.params);

    auto monitor = [&](const SimState& st) {
        for (std::size_t j = 0; j < s.outputs.size(); ++j) {
            result.series[j].push_back(series_value(s.outputs[j], st, s.params, resolved));
        }
    };
    result.trajectory = integrate_with_monitor(initial_state(s, resolved.problem), s.params, resolved.problem,
                                               s.integrator, monitor);

    // Tail-decade rate of the gap.
    for (std::size_t j = 0; j < s.outputs.size(); ++j) {
        if (s.outputs[j] != "gap") continue;
        std::vector<double> values = result.series[j];
        NamedRateFit nf;
        nf.series = "gap";
        nf.floored = apply_floor(values);
        try {
            nf.fit = fit_rate(result.times(), values, s.integrator.t_end / 10.0, s.integrator.t_end);
            result.rate_fits.push_back(nf);
        } catch (const DataError& e) {
            result.notes.emplace_back(std::string("gap rate fit skipped: ") + e.what());
        }
    }
    return result;
}

inline ScenarioResult run_scenario(const Scenario& s) { return run_scenario(s, resolve_problem(s.problem)); }

/// Worker count from SADDLEFLOW_THREADS, else hardware concurrency.
inline std::size_t thread_count_from_env() {
    if (const char* env = std::getenv("SADDLEFLOW_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs independent scenarios on a bounded worker pool. Output order matches
/// input order. The first failure is rethrown after all workers stop.
inline std::vector<ScenarioResult> run_scenarios(const std::vector<Scenario>& scenarios, std::size_t threads) {
    std::vector<ScenarioResult> results(scenarios.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) {
            try {
                results[i] = run_scenario(scenarios[i]);
            } catch (const IntegrationError& e) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::make_exception_ptr(
                        IntegrationError(scenarios[i].name + ": " + e.what(), e.last_time(), e.last_phase()));
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t count = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, scenarios.size()));
    if (count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < count; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

// ===========================================================================
// Presets
// ===========================================================================

/// x(1) = y(1) = (1, 1.5), ẋ(1) = ẏ(1) = (1, 1).
inline SimState example1_initial_state() { return {1.0, {1.0, 1.5}, {1.0, 1.5}, {1.0, 1.0}, {1.0, 1.0}}; }

inline Scenario example1_scenario(std::string name, double p, double c, double t_end, std::size_t samples) {
    Scenario s;
    s.name = std::move(name);
    s.problem = Example1Ref{};
    s.params = DynamicsParams{3.0, 0.8, p, c, PowerLaw{0.5}, 1.0};
    s.initial = example1_initial_state();
    s.integrator.t_end = t_end;
    s.integrator.sample_count = samples;
    s.integrator.h_max = 0.5;
    s.outputs = {"gap", "traj_error", "vel_norm", "E", "E_hat", "E_tilde", "dist_min_norm"};
    return s;
}

inline const std::array<double, 4>& figure1_p_values() {
    static const std::array<double, 4> ps{0.8, 1.0, 1.2, 1.4};
    return ps;
}

inline std::vector<Scenario> figure1_scenarios() {
    std::vector<Scenario> out;
    for (double p : figure1_p_values()) {
        char name[32];
        std::snprintf(name, sizeof name, "sweep_p%.1f", p);
        out.push_back(example1_scenario(name, p, 1.0, 200.0, 800));
    }
    return out;
}

inline std::vector<ScenarioResult> figure1_sweep(std::size_t threads = 1) {
    return run_scenarios(figure1_scenarios(), threads);
}

inline std::pair<Scenario, Scenario> figure2_scenarios() {
    return {example1_scenario("compare_c1", 0.8, 1.0, 20.0, 400), example1_scenario("compare_c0", 0.8, 0.0, 20.0, 400)};
}

inline std::pair<ScenarioResult, ScenarioResult> figure2_compare(std::size_t threads = 1) {
    auto [with_reg, without_reg] = figure2_scenarios();
    auto results = run_scenarios({with_reg, without_reg}, threads);
    return {std::move(results[0]), std::move(results[1])};
}

/// Paper settings on [1, 500] with one linear sample per unit time.
inline Scenario long_horizon_scenario(std::string name, double p) {
    Scenario s = example1_scenario(std::move(name), p, 1.0, 500.0, 500);
    s.integrator.sampling = Sampling::linear;
    return s;
}

/// Fast regime: q − p + r = −1.2.
inline Scenario fast_rate_scenario() { return long_horizon_scenario("fast_rate", 2.5); }

/// Slow regime: −q − p + r = −1.1.
inline Scenario slow_energy_scenario() { return long_horizon_scenario("slow_energy", 0.8); }

/// Index of the sample closest to t.
inline std::size_t nearest_sample(const Trajectory& traj, double t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < traj.samples.size(); ++k) {
        if (std::abs(traj.samples[k].t - t) < std::abs(traj.samples[best].t - t)) best = k;
    }
    return best;
}

struct RegressionCase {
    double q = 0.2;
    double r = 0.1;
};

inline const std::array<RegressionCase, 3>& paper_regression_cases() {
    static const std::array<RegressionCase, 3> cases{{{0.2, 0.1}, {0.4, 0.2}, {0.6, 0.3}}};
    return cases;
}

struct RegressionStudyCase {
    RegressionCase dynamics;
    std::size_t m = 100;
    std::size_t n = 200;
    double kappa = 10.0;
    std::uint64_t seed = 2024;
    double t_end = 100.0;
};

/// λ = 0.1, a = 100, α = 6, p = 2; zero initial state and velocity at t0 = 1.
inline Scenario regression_scenario(const RegressionStudyCase& rc, double c) {
    Scenario s;
    char name[96];
    std::snprintf(name, sizeof name, "regress_q%.1f_r%.1f_m%zu_n%zu_kappa%g_c%g", rc.dynamics.q, rc.dynamics.r, rc.m,
                  rc.n, rc.kappa, c);
    s.name = name;
    RegressionConfig cfg;
    cfg.m = rc.m;
    cfg.n = rc.n;
    cfg.lambda = 0.1;
    cfg.a = 100.0;
    cfg.kappa = rc.kappa;
    cfg.sigma_max = 1.0;
    cfg.seed = rc.seed;
    s.problem = cfg;
    s.params = DynamicsParams{6.0, rc.dynamics.q, 2.0, c, PowerLaw{rc.dynamics.r}, 1.0};
    s.integrator.t_end = rc.t_end;
    s.integrator.sample_count = 200;
    s.integrator.h_max = 0.5;
    s.outputs = {"phi", "vel_norm"};
    return s;
}

/// (m, n) = (100, 200), κ ∈ {10, 200}, each of the three (q, r) cases.
inline std::vector<RegressionStudyCase> gated_regression_cases() {
    std::vector<RegressionStudyCase> out;
    for (double kappa : {10.0, 200.0}) {
        for (const RegressionCase& rc : paper_regression_cases()) out.push_back({rc, 100, 200, kappa});
    }
    return out;
}

struct RegressionComparison {
    RegressionStudyCase setup;
    ScenarioResult regularized;   // c = 10
    ScenarioResult unregularized; // c = 0
    double phi_final_regularized = 0.0;
    double phi_final_unregularized = 0.0;

    bool regularization_helps() const noexcept { return phi_final_regularized <= phi_final_unregularized; }
};

inline std::vector<RegressionComparison> regression_study(const std::vector<RegressionStudyCase>& cases,
                                                          std::size_t threads = 1) {
    std::vector<Scenario> scenarios;
    for (const auto& rc : cases) {
        scenarios.push_back(regression_scenario(rc, 10.0));
        scenarios.push_back(regression_scenario(rc, 0.0));
    }
    auto results = run_scenarios(scenarios, threads);
    std::vector<RegressionComparison> out;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        RegressionComparison cmp;
        cmp.setup = cases[i];
        cmp.regularized = std::move(results[2 * i]);
        cmp.unregularized = std::move(results[2 * i + 1]);
        cmp.phi_final_regularized = cmp.regularized.column("phi").back();
        cmp.phi_final_unregularized = cmp.unregularized.column("phi").back();
        out.push_back(std::move(cmp));
    }
    return out;
}

} // namespace saddleflow
