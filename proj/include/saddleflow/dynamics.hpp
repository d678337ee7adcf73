#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <span>
#include <string>
#include <variant>

#include "saddleflow/errors.hpp"
#include "saddleflow/linalg.hpp"
#include "saddleflow/problem.hpp"

namespace saddleflow {

// ---------------------------------------------------------------------------
// Time scaling β(t)
// ---------------------------------------------------------------------------

struct PowerLaw {
    double r = 0.5;
};

struct CustomScaling {
    std::function<double(double)> beta;
    std::function<double(double)> beta_dot;
    std::string label = "custom";
};

using ScalingSpec = std::variant<PowerLaw, CustomScaling>;

inline double beta_value(const ScalingSpec& s, double t) {
    if (const auto* pl = std::get_if<PowerLaw>(&s)) return std::pow(t, pl->r);
    return std::get<CustomScaling>(s).beta(t);
}

inline double beta_rate(const ScalingSpec& s, double t) {
    if (const auto* pl = std::get_if<PowerLaw>(&s)) return pl->r * std::pow(t, pl->r - 1.0);
    return std::get<CustomScaling>(s).beta_dot(t);
}

/// Parameters of the Tikhonov-regularized inertial primal-dual system:
/// damping α/t^q, extrapolation t^q/(α−1), regularization c/t^p, scaling β(t).
struct DynamicsParams {
    double alpha = 3.0;
    double q = 0.8;
    double p = 0.8;
    double c = 1.0;
    ScalingSpec beta = PowerLaw{0.5};
    double t0 = 1.0;

    /// Throws ParameterError naming the first violated constraint. Custom β
    /// is checked for positivity and monotonicity on a log grid over
    /// [t0, check_until] (defaults to 1e4·t0).
    void validate(double check_until = 0.0) const {
        if (!(alpha > 1.0)) throw ParameterError("alpha", "alpha = " + fmt(alpha) + " violates alpha > 1");
        if (!(q > 0.0 && q < 1.0)) throw ParameterError("q", "q = " + fmt(q) + " violates 0 < q < 1");
        if (!(p > 0.0)) throw ParameterError("p", "p = " + fmt(p) + " violates p > 0");
        if (!(c >= 0.0)) throw ParameterError("c", "c = " + fmt(c) + " violates c >= 0");
        if (!(t0 > 0.0)) throw ParameterError("t0", "t0 = " + fmt(t0) + " violates t0 > 0");
        if (const auto* pl = std::get_if<PowerLaw>(&beta)) {
            if (!(pl->r > 0.0)) throw ParameterError("beta.r", "r = " + fmt(pl->r) + " violates r > 0");
            return;
        }
        const auto& cs = std::get<CustomScaling>(beta);
        if (!cs.beta || !cs.beta_dot) throw ParameterError("beta", "custom scaling needs beta and beta_dot");
        const double t_hi = check_until > t0 ? check_until : 1e4 * t0;
        constexpr int kGrid = 256;
        double prev = 0.0;
        for (int i = 0; i < kGrid; ++i) {
            const double t = t0 * std::pow(t_hi / t0, static_cast<double>(i) / (kGrid - 1));
            const double b = cs.beta(t);
            if (!(b > 0.0) || !std::isfinite(b)) {
                throw ParameterError("beta", "beta(" + fmt(t) + ") = " + fmt(b) + " is not positive");
            }
            if (i > 0 && b < prev) throw ParameterError("beta", "beta decreases near t = " + fmt(t));
            prev = b;
        }
    }

private:
    static std::string fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return buf;
    }
};

/// Point in phase space. Flat layout everywhere is (x, y, vx, vy).
struct SimState {
    double t = 1.0;
    Vector x;
    Vector y;
    Vector vx;
    Vector vy;

    Vector pack() const {
        Vector z;
        z.reserve(2 * (x.size() + y.size()));
        z.insert(z.end(), x.begin(), x.end());
        z.insert(z.end(), y.begin(), y.end());
        z.insert(z.end(), vx.begin(), vx.end());
        z.insert(z.end(), vy.begin(), vy.end());
        return z;
    }

    static SimState unpack(double t, std::span<const double> z, std::size_t n, std::size_t m) {
        if (z.size() != 2 * (n + m)) throw DimensionError("phase vector has wrong size");
        SimState s;
        s.t = t;
        s.x.assign(z.begin(), z.begin() + n);
        s.y.assign(z.begin() + n, z.begin() + n + m);
        s.vx.assign(z.begin() + n + m, z.begin() + 2 * n + m);
        s.vy.assign(z.begin() + 2 * n + m, z.end());
        return s;
    }

    static SimState zeros(double t, std::size_t n, std::size_t m) {
        return {t, Vector(n, 0.0), Vector(m, 0.0), Vector(n, 0.0), Vector(m, 0.0)};
    }

    friend bool operator==(const SimState&, const SimState&) = default;
};

struct PhaseDerivative {
    Vector dx;
    Vector dy;
    Vector dvx;
    Vector dvy;
};

/// Scratch storage for rhs_into; reused across calls by the integrator.
struct RhsWorkspace {
    Vector grad_f, grad_g, x_ext, y_ext, kt_y, k_x;

    void resize(std::size_t n, std::size_t m) {
        grad_f.resize(n);
        x_ext.resize(n);
        kt_y.resize(n);
        grad_g.resize(m);
        y_ext.resize(m);
        k_x.resize(m);
    }
};

/// Evaluates the phase-space right-hand side into `dz` (same layout as z).
///   ẍ = −(α/t^q)ẋ − β(t)[∇f(x) + Kᵀ(y + e·ẏ) + (c/t^p)x]
///   ÿ = −(α/t^q)ẏ + β(t)[K(x + e·ẋ) − ∇g(y) − (c/t^p)y],   e = t^q/(α−1)
inline void rhs_into(double t, std::span<const double> z, std::span<double> dz, const DynamicsParams& params,
                     const ProblemSpec& problem, RhsWorkspace& ws) {
    if (!(t > 0.0)) throw ParameterError("t", "rhs evaluated at non-positive time");
    const std::size_t n = problem.n;
    const std::size_t m = problem.m;
    if (z.size() != 2 * (n + m) || dz.size() != z.size()) throw DimensionError("rhs: phase vector size mismatch");
    ws.resize(n, m);

    const auto x = z.subspan(0, n);
    const auto y = z.subspan(n, m);
    const auto vx = z.subspan(n + m, n);
    const auto vy = z.subspan(2 * n + m, m);

    const double tq = std::pow(t, params.q);
    const double damping = params.alpha / tq;
    const double extrap = tq / (params.alpha - 1.0);
    const double tikhonov = params.c / std::pow(t, params.p);
    const double b = beta_value(params.beta, t);

    eval_f_grad(problem, x, ws.grad_f);
    eval_g_grad(problem, y, ws.grad_g);
    if (!all_finite(ws.grad_f) || !all_finite(ws.grad_g)) {
        throw NumericalError("rhs: non-finite gradient at t = " + std::to_string(t));
    }

    for (std::size_t i = 0; i < m; ++i) ws.y_ext[i] = y[i] + extrap * vy[i];
    for (std::size_t i = 0; i < n; ++i) ws.x_ext[i] = x[i] + extrap * vx[i];
    matvec_transpose_into(problem.K, ws.y_ext, ws.kt_y);
    matvec_into(problem.K, ws.x_ext, ws.k_x);

    for (std::size_t i = 0; i < n; ++i) dz[i] = vx[i];
    for (std::size_t i = 0; i < m; ++i) dz[n + i] = vy[i];
    for (std::size_t i = 0; i < n; ++i) {
        dz[n + m + i] = -damping * vx[i] - b * (ws.grad_f[i] + ws.kt_y[i] + tikhonov * x[i]);
    }
    for (std::size_t i = 0; i < m; ++i) {
        dz[2 * n + m + i] = -damping * vy[i] + b * (ws.k_x[i] - ws.grad_g[i] - tikhonov * y[i]);
    }
}

inline void rhs_into(double t, std::span<const double> z, std::span<double> dz, const DynamicsParams& params,
                     const ProblemSpec& problem) {
    RhsWorkspace ws;
    rhs_into(t, z, dz, params, problem, ws);
}

inline PhaseDerivative rhs(const SimState& state, const DynamicsParams& params, const ProblemSpec& problem) {
    problem.check_dimensions(state.x, state.y);
    if (state.vx.size() != problem.n || state.vy.size() != problem.m) {
        throw DimensionError("rhs: velocity size mismatch");
    }
    const Vector z = state.pack();
    Vector dz(z.size());
    rhs_into(state.t, z, dz, params, problem);
    SimState d = SimState::unpack(state.t, dz, problem.n, problem.m);
    return {std::move(d.x), std::move(d.y), std::move(d.vx), std::move(d.vy)};
}

/// ℒ(x, y) = f(x) + <Kx, y> − g(y)
inline double lagrangian(const ProblemSpec& problem, const Vector& x, const Vector& y) {
    problem.check_dimensions(x, y);
    Vector kx(problem.m);
    matvec_into(problem.K, x, kx);
    return problem.f_eval(x) + dot(kx, y) - problem.g_eval(y);
}

inline constexpr double kGapTolerance = 1e-12;

/// ℒ(x, y*) − ℒ(x*, y). Nonnegative for a genuine saddle; a value below
/// −kGapTolerance means the supplied saddle is not one.
inline double primal_dual_gap(const ProblemSpec& problem, const SaddlePoint& saddle, const Vector& x,
                              const Vector& y) {
    const double gap = lagrangian(problem, x, saddle.y_star) - lagrangian(problem, saddle.x_star, y);
    if (gap < -kGapTolerance) {
        throw NumericalError("primal_dual_gap = " + std::to_string(gap) + " < 0: reference is not a saddle point");
    }
    return gap;
}

/// ‖∇f(x) + Kᵀy‖ + ‖∇g(y) − Kx‖
inline double kkt_residual(const ProblemSpec& problem, const Vector& x, const Vector& y) {
    problem.check_dimensions(x, y);
    Vector primal = problem.f_grad(x);
    Vector kt_y(problem.n);
    matvec_transpose_into(problem.K, y, kt_y);
    for (std::size_t i = 0; i < primal.size(); ++i) primal[i] += kt_y[i];
    Vector dual = problem.g_grad(y);
    Vector kx(problem.m);
    matvec_into(problem.K, x, kx);
    for (std::size_t i = 0; i < dual.size(); ++i) dual[i] -= kx[i];
    return norm(primal) + norm(dual);
}

} // namespace saddleflow
