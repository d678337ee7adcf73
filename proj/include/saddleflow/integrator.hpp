#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "saddleflow/dynamics.hpp"
#include "saddleflow/errors.hpp"
#include "saddleflow/linalg.hpp"

namespace saddleflow {

enum class Sampling { log, linear };

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double h_init = 1e-3;
    double h_min = 1e-12;
    double h_max = 1.0;
    double t_end = 20.0;
    std::size_t sample_count = 400;
    Sampling sampling = Sampling::log;

    void validate(double t0) const {
        if (!(rel_tol > 0.0)) throw ParameterError("integrator.rel_tol", "must be > 0");
        if (!(abs_tol > 0.0)) throw ParameterError("integrator.abs_tol", "must be > 0");
        if (!(h_min > 0.0 && h_min <= h_init && h_init <= h_max)) {
            throw ParameterError("integrator.h_init", "requires 0 < h_min <= h_init <= h_max");
        }
        if (!(t_end > t0)) throw ParameterError("integrator.t_end", "must exceed t0");
        if (sample_count < 2) throw ParameterError("integrator.sample_count", "must be >= 2");
    }
};

/// Output grid: first point exactly t0, last exactly t_end.
inline std::vector<double> sample_times(double t0, const IntegratorConfig& cfg) {
    const std::size_t count = cfg.sample_count;
    std::vector<double> ts(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(count - 1);
        ts[k] = cfg.sampling == Sampling::log ? t0 * std::pow(cfg.t_end / t0, frac) : t0 + (cfg.t_end - t0) * frac;
    }
    ts.front() = t0;
    ts.back() = cfg.t_end;
    return ts;
}

/// Integration failed. Carries the last accepted time and phase vector.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double last_time, Vector last_phase)
        : Error(what), last_time_(last_time), last_phase_(std::move(last_phase)) {}

    double last_time() const noexcept { return last_time_; }
    const Vector& last_phase() const noexcept { return last_phase_; }

private:
    double last_time_;
    Vector last_phase_;
};

class MonitorError : public Error {
public:
    using Error::Error;
};

struct OdeStats {
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    std::size_t rhs_evals = 0;
};

namespace dopri {

inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                        a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                        a76 = 11.0 / 84.0;
// 5th minus embedded 4th order weights.
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                        e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Dense output (Hairer, Nørsett & Wanner, contd5).
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

} // namespace dopri

/// 4th-order continuous extension of one accepted step on [t_old, t_old + h].
class DenseStep {
public:
    double t_old = 0.0;
    double h = 0.0;

    void interpolate(double t, std::span<double> out) const {
        const double theta = (t - t_old) / h;
        const double theta1 = 1.0 - theta;
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = r_[0][i] + theta * (r_[1][i] + theta1 * (r_[2][i] + theta * (r_[3][i] + theta1 * r_[4][i])));
        }
    }

    Vector interpolate(double t) const {
        Vector out(r_[0].size());
        interpolate(t, out);
        return out;
    }

private:
    template <class System, class StepObserver, class SampleSink>
    friend OdeStats dopri5(System&&, double, Vector, const IntegratorConfig&, std::span<const double>, SampleSink&&,
                           StepObserver&&);

    std::array<Vector, 5> r_;
};

struct NoStepObserver {
    void operator()(const DenseStep&, std::span<const double>) const noexcept {}
};

/// Dormand-Prince 5(4) with elementary step control.
///
/// `system(t, z, dz)` evaluates the right-hand side. `sink(k, t_k, z_k)` is
/// called once per entry of `times` in order; times[0] must equal t0 and the
/// last entry cfg.t_end. `observer(dense, z_new)` sees every accepted step.
template <class System, class StepObserver, class SampleSink>
OdeStats dopri5(System&& system, double t0, Vector z0, const IntegratorConfig& cfg, std::span<const double> times,
                SampleSink&& sink, StepObserver&& observer) {
    using namespace dopri;
    cfg.validate(t0);
    if (times.empty() || times.front() != t0 || times.back() != cfg.t_end) {
        throw ParameterError("integrator.samples", "sample grid must start at t0 and end at t_end");
    }

    const std::size_t dim = z0.size();
    OdeStats stats;
    Vector z = std::move(z0);
    Vector k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
    Vector stage(dim), z_new(dim), sample(dim);
    double t = t0;

    auto eval = [&](double te, const Vector& ze, Vector& ke) {
        try {
            system(te, std::span<const double>(ze), std::span<double>(ke));
        } catch (const NumericalError& e) {
            throw IntegrationError(std::string("right-hand side failed: ") + e.what(), t, z);
        }
        ++stats.rhs_evals;
        if (!all_finite(ke)) {
            throw IntegrationError("non-finite right-hand side at t = " + std::to_string(te), t, z);
        }
    };

    eval(t, z, k1);
    std::size_t next = 0;
    sink(next++, t, std::span<const double>(z));

    double h = std::min(cfg.h_init, cfg.h_max);
    DenseStep dense;
    while (t < cfg.t_end) {
        if (t + h >= cfg.t_end - cfg.h_min) h = cfg.t_end - t;

        for (std::size_t i = 0; i < dim; ++i) stage[i] = z[i] + h * a21 * k1[i];
        eval(t + c2 * h, stage, k2);
        for (std::size_t i = 0; i < dim; ++i) stage[i] = z[i] + h * (a31 * k1[i] + a32 * k2[i]);
        eval(t + c3 * h, stage, k3);
        for (std::size_t i = 0; i < dim; ++i) stage[i] = z[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        eval(t + c4 * h, stage, k4);
        for (std::size_t i = 0; i < dim; ++i) {
            stage[i] = z[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        }
        eval(t + c5 * h, stage, k5);
        for (std::size_t i = 0; i < dim; ++i) {
            stage[i] = z[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        }
        const double t_new = (h == cfg.t_end - t) ? cfg.t_end : t + h;
        eval(t + h, stage, k6);
        for (std::size_t i = 0; i < dim; ++i) {
            z_new[i] = z[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        }
        eval(t_new, z_new, k7);

        double acc = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double est = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(z[i]), std::abs(z_new[i]));
            acc += (est / scale) * (est / scale);
        }
        const double err = dim > 0 ? std::sqrt(acc / static_cast<double>(dim)) : 0.0;
        const double factor = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));

        if (err <= 1.0) {
            dense.t_old = t;
            dense.h = t_new - t;
            dense.r_[0] = z;
            for (auto& r : dense.r_) r.resize(dim);
            for (std::size_t i = 0; i < dim; ++i) {
                const double diff = z_new[i] - z[i];
                const double bspl = h * k1[i] - diff;
                dense.r_[1][i] = diff;
                dense.r_[2][i] = bspl;
                dense.r_[3][i] = diff - h * k7[i] - bspl;
                dense.r_[4][i] =
                    h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
            }
            observer(static_cast<const DenseStep&>(dense), std::span<const double>(z_new));

            while (next < times.size() && times[next] <= t_new) {
                if (times[next] == t_new) {
                    sink(next, times[next], std::span<const double>(z_new));
                } else {
                    dense.interpolate(times[next], sample);
                    sink(next, times[next], std::span<const double>(sample));
                }
                ++next;
            }
            ++stats.accepted_steps;
            t = t_new;
            std::swap(z, z_new);
            std::swap(k1, k7);
            h = std::max(std::min(h * factor, cfg.h_max), cfg.h_min);
        } else {
            ++stats.rejected_steps;
            double h_next = h * factor;
            if (h_next < cfg.h_min) {
                if (h <= cfg.h_min) {
                    throw IntegrationError("step size underflow at t = " + std::to_string(t), t, z);
                }
                h_next = cfg.h_min;
            }
            h = h_next;
        }
    }
    return stats;
}

template <class System, class SampleSink>
OdeStats dopri5(System&& system, double t0, Vector z0, const IntegratorConfig& cfg, std::span<const double> times,
                SampleSink&& sink) {
    return dopri5(std::forward<System>(system), t0, std::move(z0), cfg, times, std::forward<SampleSink>(sink),
                  NoStepObserver{});
}

// ---------------------------------------------------------------------------
// Phase-space integration of the primal-dual system
// ---------------------------------------------------------------------------

struct Trajectory {
    std::vector<SimState> samples;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    std::size_t rhs_evals = 0;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

using SampleMonitor = std::function<void(const SimState&)>;

/// Integrates from state0 (state0.t must equal params.t0), calling `monitor`
/// on every output sample in time order.
inline Trajectory integrate_with_monitor(const SimState& state0, const DynamicsParams& params,
                                         const ProblemSpec& problem, const IntegratorConfig& cfg,
                                         const SampleMonitor& monitor) {
    params.validate(cfg.t_end);
    cfg.validate(params.t0);
    if (state0.t != params.t0) throw ParameterError("initial.t", "initial time must equal t0");
    problem.check_dimensions(state0.x, state0.y);
    if (state0.vx.size() != problem.n || state0.vy.size() != problem.m) {
        throw DimensionError("initial velocity size mismatch");
    }
    require_finite(state0.pack(), "initial state");

    const std::vector<double> times = sample_times(params.t0, cfg);
    Trajectory traj;
    traj.samples.reserve(times.size());
    RhsWorkspace ws;
    auto system = [&](double t, std::span<const double> z, std::span<double> dz) {
        rhs_into(t, z, dz, params, problem, ws);
    };
    auto sink = [&](std::size_t, double t, std::span<const double> z) {
        traj.samples.push_back(SimState::unpack(t, z, problem.n, problem.m));
        if (monitor) {
            try {
                monitor(traj.samples.back());
            } catch (const std::exception& e) {
                throw MonitorError("monitor failed at t = " + std::to_string(t) + ": " + e.what());
            }
        }
    };
    const OdeStats stats = dopri5(system, params.t0, state0.pack(), cfg, times, sink);
    traj.accepted_steps = stats.accepted_steps;
    traj.rejected_steps = stats.rejected_steps;
    traj.rhs_evals = stats.rhs_evals;
    return traj;
}

inline Trajectory integrate(const SimState& state0, const DynamicsParams& params, const ProblemSpec& problem,
                            const IntegratorConfig& cfg) {
    return integrate_with_monitor(state0, params, problem, cfg, nullptr);
}

} // namespace saddleflow
