// saddleflow: run, audit and compare primal-dual inertial dynamics.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "saddleflow/diagnostics.hpp"
#include "saddleflow/experiments.hpp"
#include "saddleflow/io.hpp"
#include "saddleflow/tikhonov_path.hpp"

namespace fs = std::filesystem;
using namespace saddleflow;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kInput = 2, kIntegration = 3, kData = 4, kPath = 5 };

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct TimedResult {
    Scenario scenario;
    ResolvedProblem resolved;
    ScenarioResult result;
    double wall_time = 0.0;
};

TimedResult run_one(const Scenario& s) {
    const auto start = std::chrono::steady_clock::now();
    TimedResult out{s, resolve_problem(s.problem), {}, 0.0};
    out.result = run_scenario(s, out.resolved);
    out.wall_time = seconds_since(start);
    return out;
}

std::vector<TimedResult> run_many(const std::vector<Scenario>& scenarios) {
    std::vector<TimedResult> results(scenarios.size());
    // Wall time is recorded for the whole batch.
    const auto start = std::chrono::steady_clock::now();
    auto raw = run_scenarios(scenarios, thread_count_from_env());
    const double total = seconds_since(start);
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        results[i].scenario = scenarios[i];
        results[i].resolved = resolve_problem(scenarios[i].problem);
        results[i].result = std::move(raw[i]);
        results[i].wall_time = total;
    }
    return results;
}

void print_fits(const ScenarioResult& r) {
    for (const auto& f : r.rate_fits) {
        std::printf("  %s slope over [%g, %g]: %.6g (r^2 = %.6f, %zu points, %zu floored)\n", f.series.c_str(),
                    f.fit.t_a, f.fit.t_b, f.fit.slope, f.fit.r_squared, f.fit.points, f.floored);
    }
    for (const auto& n : r.notes) std::printf("  note: %s\n", n.c_str());
}

void write_run(const fs::path& dir, const TimedResult& tr) {
    const auto files = write_scenario_outputs(dir, tr.scenario, tr.resolved, tr.result, tr.wall_time);
    std::printf("%s: %zu samples, %zu steps -> %s\n", tr.scenario.name.c_str(), tr.result.trajectory.samples.size(),
                tr.result.trajectory.accepted_steps, dir.string().c_str());
    print_fits(tr.result);
}

std::string regime_label(const std::string& regime) {
    if (regime == "fast") return "fast (gap = O(1/(t^{2q} beta)), velocity = O(1/t^q))";
    if (regime == "slow") return "slow (gap = o(1/beta))";
    if (regime == "strong") return "strong (trajectory -> minimal-norm saddle)";
    return "none";
}

void print_report(const AssumptionReport& rep) {
    std::printf("%-26s %-8s %-12s %s\n", "condition", "status", "threshold_t", "statement");
    for (const ConditionResult* c : rep.conditions()) {
        char thr[32] = "-";
        if (c->threshold_t) std::snprintf(thr, sizeof thr, "%.6g", *c->threshold_t);
        std::printf("%-26s %-8s %-12s %s\n", c->name.c_str(), to_string(c->status), thr, c->statement.c_str());
        if (!c->detail.empty()) std::printf("%-26s %s\n", "", c->detail.c_str());
    }
    std::printf("witness M: %s%s\n", format_double(rep.witness_M).c_str(), rep.sampled ? " (sampled, not proven)" : "");
    for (const auto& regime : rep.regimes()) std::printf("regime: %s\n", regime_label(regime).c_str());
}

Vector parse_vector_list(const std::string& text, const std::string& field) {
    Vector out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0') throw ParameterError(field, "'" + cell + "' is not a number");
        out.push_back(v);
    }
    if (out.empty()) throw ParameterError(field, "expected a comma-separated list of numbers");
    return out;
}

int report_error(const std::exception& e, int code) {
    std::fprintf(stderr, "saddleflow: %s\n", e.what());
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulate and audit Tikhonov-regularized primal-dual inertial dynamics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    // run
    auto* run = app.add_subcommand("run", "Integrate a scenario file (or replay a run manifest)");
    std::string scenario_path;
    std::string out_dir = "out";
    run->add_option("scenario", scenario_path, "Scenario JSON or manifest.json")->required();
    run->add_option("-o,--out", out_dir, "Output directory");

    // check
    auto* check = app.add_subcommand("check", "Evaluate parameter conditions and the implied convergence regimes");
    DynamicsParams cp;
    double beta_pow = 0.5;
    double t_check = 1e6;
    bool sampled = false;
    bool as_json = false;
    check->add_option("--alpha", cp.alpha, "Friction constant alpha > 1")->capture_default_str();
    check->add_option("--q", cp.q, "Time-scaling exponent 0 < q < 1")->capture_default_str();
    check->add_option("--p", cp.p, "Tikhonov decay exponent p > 0")->capture_default_str();
    check->add_option("--c", cp.c, "Tikhonov weight c >= 0")->capture_default_str();
    check->add_option("--beta-pow", beta_pow, "beta(t) = t^r with r >= 0")->capture_default_str();
    check->add_option("--t0", cp.t0, "Initial time t0 > 0")->capture_default_str();
    check->add_option("--t-check", t_check, "Horizon for sampled checks")->capture_default_str();
    check->add_flag("--sampled", sampled, "Use the sampled quadrature checker instead of closed forms");
    check->add_flag("--json", as_json, "Print the report as JSON");

    // rate
    auto* rate = app.add_subcommand("rate", "Fit a log-log slope to one CSV column over a time window");
    std::string csv_path;
    std::string column = "gap";
    std::string time_column = "t";
    double t_a = 0.0;
    double t_b = 0.0;
    bool floor_values = false;
    rate->add_option("csv", csv_path, "CSV file with a time column")->required();
    rate->add_option("-c,--column", column, "Value column")->capture_default_str();
    rate->add_option("--time-column", time_column, "Time column")->capture_default_str();
    rate->add_option("--ta", t_a, "Window start")->required();
    rate->add_option("--tb", t_b, "Window end")->required();
    rate->add_flag("--floor", floor_values, "Clamp values below 1e-16 before fitting");

    // minnorm
    auto* minnorm = app.add_subcommand("minnorm", "Follow the Tikhonov path to the minimal-norm saddle point");
    std::string mn_problem = "example1";
    std::string mn_shift = "1,-2";
    std::size_t mn_m = 1;
    int eps_last = 12;
    std::string path_out = "path.csv";
    minnorm->add_option("--problem", mn_problem, "example1 or quadratic")->capture_default_str();
    minnorm->add_option("--shift", mn_shift, "Quadratic shift u (comma-separated)")->capture_default_str();
    minnorm->add_option("--m", mn_m, "Quadratic dual dimension")->capture_default_str();
    minnorm->add_option("--eps-last", eps_last, "Schedule runs 10^0 .. 10^-k")->capture_default_str();
    minnorm->add_option("-o,--out", path_out, "Path CSV")->capture_default_str();

    // presets
    auto* sweep = app.add_subcommand("sweep", "Tikhonov decay sweep p in {0.8, 1.0, 1.2, 1.4}");
    std::string sweep_out = "out/sweep";
    sweep->add_option("-o,--out", sweep_out, "Output root")->capture_default_str();

    auto* compare = app.add_subcommand("compare", "Regularized (c = 1) versus unregularized (c = 0) trajectories");
    std::string compare_out = "out/compare";
    compare->add_option("-o,--out", compare_out, "Output root")->capture_default_str();

    auto* regress = app.add_subcommand("regress", "Smoothed-l1 regression study, c = 10 versus c = 0");
    std::string regress_out = "out/regress";
    std::vector<double> kappas{10.0, 200.0};
    std::size_t reg_m = 100;
    std::size_t reg_n = 200;
    double reg_t_end = 100.0;
    std::uint64_t reg_seed = 2024;
    regress->add_option("-o,--out", regress_out, "Output root")->capture_default_str();
    regress->add_option("--kappa", kappas, "Condition numbers")->capture_default_str();
    regress->add_option("--m", reg_m, "Rows of K")->capture_default_str();
    regress->add_option("--n", reg_n, "Columns of K")->capture_default_str();
    regress->add_option("--t-end", reg_t_end, "Final time")->capture_default_str();
    regress->add_option("--seed", reg_seed, "Instance seed")->capture_default_str();

    auto* preset = app.add_subcommand("preset", "Print a built-in scenario as JSON");
    std::string preset_name;
    preset->add_option("name", preset_name,
                       "compare_c1, compare_c0, sweep_p0.8 .. sweep_p1.4, fast_rate, slow_energy, regress_q0.2_c10, ...")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInput;
    }

    try {
        if (run->parsed()) {
            const Scenario s = load_scenario(scenario_path);
            write_run(out_dir, run_one(s));
            return kOk;
        }
        if (check->parsed()) {
            cp.beta = PowerLaw{beta_pow};
            cp.validate();
            const AssumptionReport rep = sampled ? check_assumptions_sampled(cp, t_check) : check_assumptions(cp, t_check);
            if (as_json) {
                std::printf("%s\n", to_json(rep).dump(2).c_str());
            } else {
                print_report(rep);
            }
            return kOk;
        }
        if (rate->parsed()) {
            const CsvTable table = parse_csv(read_text_file(csv_path));
            const std::vector<double> t = table.column(time_column);
            std::vector<double> v = table.column(column);
            const std::size_t floored = floor_values ? apply_floor(v) : 0;
            const RateFit fit = fit_rate(t, v, t_a, t_b);
            std::printf("slope %s\nintercept %s\nr_squared %s\npoints %zu\nfloored %zu\n",
                        format_double(fit.slope).c_str(), format_double(fit.intercept).c_str(),
                        format_double(fit.r_squared).c_str(), fit.points, floored);
            return kOk;
        }
        if (minnorm->parsed()) {
            ProblemRef ref;
            if (mn_problem == "example1") {
                ref = Example1Ref{};
            } else if (mn_problem == "quadratic") {
                ref = QuadraticRef{parse_vector_list(mn_shift, "--shift"), mn_m};
            } else {
                throw ParameterError("--problem", "expected example1 or quadratic");
            }
            if (eps_last < 8) throw ParameterError("--eps-last", "schedule must reach 1e-8 (k >= 8)");
            const ResolvedProblem resolved = resolve_problem(ref);
            const MinNormSolution sol =
                min_norm_solution(resolved.problem, *resolved.min_norm_saddle, default_epsilon_schedule(eps_last));
            write_text_file(path_out, path_csv(sol.path));
            std::printf("z_bar");
            for (double v : sol.z_bar) std::printf(" %s", format_double(v).c_str());
            std::printf("\nkkt_residual %s\nfinal_epsilon %s\ncauchy_gap %s\npath_levels %zu\n",
                        format_double(sol.kkt_residual).c_str(), format_double(sol.final_epsilon).c_str(),
                        format_double(sol.cauchy_gap).c_str(), sol.path.size());
            double max_norm = 0.0;
            for (const PathPoint& pt : sol.path) max_norm = std::max(max_norm, norm(pt.z));
            std::printf("max_path_norm %s\nz_bar_norm %s\n", format_double(max_norm).c_str(),
                        format_double(norm(sol.z_bar)).c_str());
            return kOk;
        }
        if (sweep->parsed()) {
            for (const TimedResult& tr : run_many(figure1_scenarios())) write_run(fs::path(sweep_out) / tr.scenario.name, tr);
            return kOk;
        }
        if (compare->parsed()) {
            auto [c1, c0] = figure2_scenarios();
            for (const TimedResult& tr : run_many({c1, c0})) {
                write_run(fs::path(compare_out) / tr.scenario.name, tr);
                const SimState& last = tr.result.trajectory.samples.back();
                std::printf("  final (x, y):");
                for (double v : concat(last.x, last.y)) std::printf(" %.6f", v);
                std::printf("  norm %.6f\n", norm(concat(last.x, last.y)));
            }
            return kOk;
        }
        if (regress->parsed()) {
            std::vector<RegressionStudyCase> cases;
            for (double kappa : kappas) {
                for (const RegressionCase& rc : paper_regression_cases()) {
                    cases.push_back({rc, reg_m, reg_n, kappa, reg_seed, reg_t_end});
                }
            }
            std::vector<Scenario> scenarios;
            for (const auto& rc : cases) {
                scenarios.push_back(regression_scenario(rc, 10.0));
                scenarios.push_back(regression_scenario(rc, 0.0));
            }
            const auto results = run_many(scenarios);
            std::string summary = "q,r,kappa,phi_initial,phi_final_c10,phi_final_c0,regularization_helps\n";
            for (std::size_t i = 0; i < cases.size(); ++i) {
                const TimedResult& reg = results[2 * i];
                const TimedResult& plain = results[2 * i + 1];
                write_run(fs::path(regress_out) / reg.scenario.name, reg);
                write_run(fs::path(regress_out) / plain.scenario.name, plain);
                const auto& phi_reg = reg.result.column("phi");
                const auto& phi_plain = plain.result.column("phi");
                summary += format_double(cases[i].dynamics.q) + "," + format_double(cases[i].dynamics.r) + "," +
                           format_double(cases[i].kappa) + "," + format_double(phi_reg.front()) + "," +
                           format_double(phi_reg.back()) + "," + format_double(phi_plain.back()) + "," +
                           (phi_reg.back() <= phi_plain.back() ? "1" : "0") + "\n";
            }
            fs::create_directories(regress_out);
            write_text_file(fs::path(regress_out) / "summary.csv", summary);
            std::printf("%s", summary.c_str());
            return kOk;
        }
        if (preset->parsed()) {
            std::vector<Scenario> all = figure1_scenarios();
            auto [c1, c0] = figure2_scenarios();
            all.push_back(c1);
            all.push_back(c0);
            all.push_back(fast_rate_scenario());
            all.push_back(slow_energy_scenario());
            for (const auto& rc : gated_regression_cases()) {
                all.push_back(regression_scenario(rc, 10.0));
                all.push_back(regression_scenario(rc, 0.0));
            }
            for (const Scenario& s : all) {
                if (s.name == preset_name) {
                    std::printf("%s\n", to_json(s).dump(2).c_str());
                    return kOk;
                }
            }
            std::string names;
            for (const Scenario& s : all) names += " " + s.name;
            throw ParameterError("name", "unknown preset; available:" + names);
        }
    } catch (const ParseError& e) {
        return report_error(e, kInput);
    } catch (const ParameterError& e) {
        return report_error(e, kInput);
    } catch (const DimensionError& e) {
        return report_error(e, kInput);
    } catch (const IntegrationError& e) {
        std::fprintf(stderr, "saddleflow: integration failed: %s (last good t = %s)\n", e.what(),
                     format_double(e.last_time()).c_str());
        return kIntegration;
    } catch (const MonitorError& e) {
        return report_error(e, kIntegration);
    } catch (const NumericalError& e) {
        return report_error(e, kIntegration);
    } catch (const DataError& e) {
        return report_error(e, kData);
    } catch (const PathError& e) {
        return report_error(e, kPath);
    } catch (const std::exception& e) {
        return report_error(e, kFailure);
    }
    return kOk;
}
