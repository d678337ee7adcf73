#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "saddleflow/dynamics.hpp"
#include "saddleflow/errors.hpp"
#include "saddleflow/linalg.hpp"
#include "saddleflow/problem.hpp"

namespace saddleflow {

// Φ_{z*}(z) = ℒ(x, y*) − ℒ(x*, y) is minimized exactly on the saddle set, with
// optimal value 0. Adding (ε/2)‖z‖² gives a strongly convex problem whose
// minimizer z_ε tends to the minimal-norm saddle as ε → 0.

inline double phi_value(const ProblemSpec& problem, const SaddlePoint& saddle, std::span<const double> z) {
    if (z.size() != problem.n + problem.m) throw DimensionError("phi: z must have n + m entries");
    const Vector x(z.begin(), z.begin() + problem.n);
    const Vector y(z.begin() + problem.n, z.end());
    return lagrangian(problem, x, saddle.y_star) - lagrangian(problem, saddle.x_star, y);
}

/// ∇Φ_{z*}(z) = (∇f(x) + Kᵀy*, ∇g(y) − Kx*). The blocks decouple.
inline Vector phi_grad(const ProblemSpec& problem, const SaddlePoint& saddle, std::span<const double> z) {
    if (z.size() != problem.n + problem.m) throw DimensionError("phi_grad: z must have n + m entries");
    const Vector x(z.begin(), z.begin() + problem.n);
    const Vector y(z.begin() + problem.n, z.end());
    Vector gx = problem.f_grad(x);
    Vector kt(problem.n);
    matvec_transpose_into(problem.K, saddle.y_star, kt);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += kt[i];
    Vector gy = problem.g_grad(y);
    Vector kx(problem.m);
    matvec_into(problem.K, saddle.x_star, kx);
    for (std::size_t i = 0; i < gy.size(); ++i) gy[i] -= kx[i];
    return concat(gx, gy);
}

inline double regularized_phi(const ProblemSpec& problem, const SaddlePoint& saddle, double epsilon,
                              std::span<const double> z) {
    return phi_value(problem, saddle, z) + 0.5 * epsilon * squared_norm(z);
}

struct PathPoint {
    double epsilon = 0.0;
    Vector z;
    double grad_norm = 0.0;
    std::size_t iterations = 0;
    std::vector<double> objective_history; // filled when requested
};

struct RegularizedSolveOptions {
    double tol = 1e-10;
    std::size_t max_iterations = 1'000'000;
    bool record_objective = false;
};

/// Power-iteration estimate of the largest curvature of Φ at z, from
/// finite-difference Hessian-vector products.
inline double estimate_phi_lipschitz(const ProblemSpec& problem, const SaddlePoint& saddle,
                                     std::span<const double> z) {
    const std::size_t dim = z.size();
    const double delta = 1e-6 * (1.0 + norm(z));
    const Vector g0 = phi_grad(problem, saddle, z);
    Vector v(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    double lambda = 0.0;
    Vector probe(dim);
    for (int it = 0; it < 30; ++it) {
        for (std::size_t i = 0; i < dim; ++i) probe[i] = z[i] + delta * v[i];
        Vector hv = phi_grad(problem, saddle, probe);
        for (std::size_t i = 0; i < dim; ++i) hv[i] = (hv[i] - g0[i]) / delta;
        const double nrm = norm(hv);
        if (!(nrm > 0.0) || !std::isfinite(nrm)) break;
        lambda = nrm;
        for (std::size_t i = 0; i < dim; ++i) v[i] = hv[i] / nrm;
    }
    return std::max(lambda, 1e-12);
}

/// Minimizes Φ_{z*} + (ε/2)‖·‖² by gradient descent with Armijo backtracking
/// (constant 1e-4, shrink 0.5) from the trial step 1/(ε + L̂).
inline PathPoint solve_regularized(const ProblemSpec& problem, const SaddlePoint& saddle, double epsilon,
                                   const Vector& z_init, const RegularizedSolveOptions& opts = {}) {
    if (!(epsilon > 0.0)) throw ParameterError("epsilon", "must be > 0");
    if (!(opts.tol > 0.0)) throw ParameterError("tol", "must be > 0");
    if (z_init.size() != problem.n + problem.m) throw DimensionError("solve_regularized: z_init size mismatch");

    PathPoint out;
    out.epsilon = epsilon;
    out.z = z_init;
    const double trial_step = 1.0 / (epsilon + estimate_phi_lipschitz(problem, saddle, z_init));

    auto gradient = [&](const Vector& z) {
        Vector g = phi_grad(problem, saddle, z);
        axpy(epsilon, z, g);
        return g;
    };

    double value = regularized_phi(problem, saddle, epsilon, out.z);
    Vector g = gradient(out.z);
    double gnorm = norm(g);
    if (opts.record_objective) out.objective_history.push_back(value);

    Vector candidate(out.z.size());
    while (gnorm > opts.tol) {
        if (out.iterations >= opts.max_iterations) {
            throw PathError("solve_regularized: iteration cap reached at epsilon = " + std::to_string(epsilon) +
                            " with gradient norm " + std::to_string(gnorm));
        }
        double step = trial_step;
        double cand_value = 0.0;
        Vector cand_grad;
        for (int shrink = 0;; ++shrink) {
            for (std::size_t i = 0; i < candidate.size(); ++i) candidate[i] = out.z[i] - step * g[i];
            cand_value = regularized_phi(problem, saddle, epsilon, candidate);
            if (std::isfinite(cand_value) && cand_value <= value - 1e-4 * step * gnorm * gnorm) break;
            cand_grad = gradient(candidate);
            // Near the minimizer the Armijo decrease drops below the rounding
            // level of the objective; accept when the gradient still shrinks.
            if (std::isfinite(cand_value) && cand_value <= value + 1e-14 * (1.0 + std::abs(value)) &&
                norm(cand_grad) < gnorm) {
                break;
            }
            cand_grad.clear();
            if (shrink >= 80) {
                throw PathError("solve_regularized: line search failed at epsilon = " + std::to_string(epsilon));
            }
            step *= 0.5;
        }
        out.z = candidate;
        value = cand_value;
        g = cand_grad.empty() ? gradient(out.z) : std::move(cand_grad);
        gnorm = norm(g);
        ++out.iterations;
        if (opts.record_objective) out.objective_history.push_back(value);
    }
    out.grad_norm = gnorm;
    return out;
}

struct MinNormSolution {
    Vector z_bar;
    SaddlePoint saddle;
    double kkt_residual = 0.0;
    double final_epsilon = 0.0;
    double cauchy_gap = 0.0; // ‖z_{ε_k} − z_{ε_{k−1}}‖ at the accepted level
    std::vector<PathPoint> path;
};

inline std::vector<double> default_epsilon_schedule(int last_exponent = 12) {
    std::vector<double> eps;
    for (int k = 0; k <= last_exponent; ++k) eps.push_back(std::pow(10.0, -k));
    return eps;
}

struct MinNormOptions {
    double cauchy_tol = 1e-7;
    double kkt_tol = 1e-8;
    RegularizedSolveOptions solve{};
};

/// Follows the Tikhonov curve along a decreasing ε schedule with warm starts
/// and returns its limit, the minimal-norm saddle point. `reference` may be
/// any saddle point; the limit does not depend on it.
inline MinNormSolution min_norm_solution(const ProblemSpec& problem, const SaddlePoint& reference,
                                         const std::vector<double>& schedule = default_epsilon_schedule(),
                                         const MinNormOptions& opts = {}) {
    if (schedule.size() < 2) throw ParameterError("schedule", "needs at least two levels");
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        if (!(schedule[k] > 0.0)) throw ParameterError("schedule", "levels must be positive");
        if (k > 0 && !(schedule[k] < schedule[k - 1])) throw ParameterError("schedule", "must be strictly decreasing");
    }
    if (schedule.back() > 1e-8) throw ParameterError("schedule", "must reach epsilon <= 1e-8");

    MinNormSolution sol;
    Vector warm(problem.n + problem.m, 0.0);
    double prev_gap = std::numeric_limits<double>::infinity();
    int stalls = 0;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        PathPoint pt = solve_regularized(problem, reference, schedule[k], warm, opts.solve);
        warm = pt.z;
        sol.path.push_back(std::move(pt));
        if (k == 0) continue;

        const Vector& z_now = sol.path[k].z;
        const double gap = distance(z_now, sol.path[k - 1].z);
        const Vector x(z_now.begin(), z_now.begin() + problem.n);
        const Vector y(z_now.begin() + problem.n, z_now.end());
        const double kkt = kkt_residual(problem, x, y);
        if (gap <= opts.cauchy_tol && kkt <= opts.kkt_tol) {
            sol.z_bar = z_now;
            sol.saddle = {x, y};
            sol.kkt_residual = kkt;
            sol.final_epsilon = schedule[k];
            sol.cauchy_gap = gap;
            return sol;
        }
        stalls = gap >= prev_gap ? stalls + 1 : 0;
        if (stalls >= 3) {
            throw PathError("min_norm_solution: Cauchy gap stopped decreasing at epsilon = " +
                            std::to_string(schedule[k]));
        }
        prev_gap = gap;
    }
    throw PathError("min_norm_solution: schedule exhausted before the path converged");
}

struct CurveInequalityResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// Checks (ε/2)(‖z − z_ε‖² + ‖z_ε‖² − ‖z̄*‖²) ≤ Φ^ε_{z̄*}(z) − Φ^ε_{z̄*}(z̄*)
/// with z_ε computed relative to the minimal-norm saddle z̄*.
inline CurveInequalityResult curve_inequality_check(const ProblemSpec& problem, const SaddlePoint& min_norm_saddle,
                                   std::span<const double> z, double epsilon, const Vector& z_eps) {
    const Vector z_bar = min_norm_saddle.stacked();
    if (z.size() != z_bar.size() || z_eps.size() != z_bar.size()) throw DimensionError("curve_inequality_check: size mismatch");
    CurveInequalityResult r;
    r.lhs = 0.5 * epsilon * (std::pow(distance(z, z_eps), 2) + squared_norm(z_eps) - squared_norm(z_bar));
    r.rhs = regularized_phi(problem, min_norm_saddle, epsilon, z) -
            regularized_phi(problem, min_norm_saddle, epsilon, z_bar);
    r.holds = r.lhs <= r.rhs + 1e-10;
    return r;
}

inline CurveInequalityResult curve_inequality_check(const ProblemSpec& problem, const SaddlePoint& min_norm_saddle,
                                   std::span<const double> z, double epsilon) {
    const PathPoint pt = solve_regularized(problem, min_norm_saddle, epsilon, min_norm_saddle.stacked());
    return curve_inequality_check(problem, min_norm_saddle, z, epsilon, pt.z);
}

} // namespace saddleflow
