#pragma once

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <span>
#include <string>
#include <utility>

#include "saddleflow/errors.hpp"
#include "saddleflow/linalg.hpp"
#include "saddleflow/rng.hpp"

namespace saddleflow {

/// Bilinear saddle problem  min_x max_y  f(x) + <Kx, y> - g(y)
/// with smooth convex f: R^n -> R and g: R^m -> R.
struct ProblemSpec {
    std::size_t n = 0;
    std::size_t m = 0;
    std::function<double(const Vector&)> f_eval;
    std::function<Vector(const Vector&)> f_grad;
    std::function<double(const Vector&)> g_eval;
    std::function<Vector(const Vector&)> g_grad;
    Matrix K; // m x n
    std::string name;
    // Optional allocation-free gradients, used on the integrator hot path.
    std::function<void(std::span<const double>, std::span<double>)> f_grad_into;
    std::function<void(std::span<const double>, std::span<double>)> g_grad_into;

    void check_dimensions(std::span<const double> x, std::span<const double> y) const {
        if (x.size() != n || y.size() != m) {
            throw DimensionError(name + ": expected x in R^" + std::to_string(n) + ", y in R^" + std::to_string(m) +
                                 ", got sizes " + std::to_string(x.size()) + ", " + std::to_string(y.size()));
        }
    }
};

inline void eval_f_grad(const ProblemSpec& p, std::span<const double> x, std::span<double> out) {
    if (p.f_grad_into) {
        p.f_grad_into(x, out);
        return;
    }
    const Vector g = p.f_grad(Vector(x.begin(), x.end()));
    if (g.size() != out.size()) throw DimensionError(p.name + ": f_grad returned wrong size");
    std::copy(g.begin(), g.end(), out.begin());
}

inline void eval_g_grad(const ProblemSpec& p, std::span<const double> y, std::span<double> out) {
    if (p.g_grad_into) {
        p.g_grad_into(y, out);
        return;
    }
    const Vector g = p.g_grad(Vector(y.begin(), y.end()));
    if (g.size() != out.size()) throw DimensionError(p.name + ": g_grad returned wrong size");
    std::copy(g.begin(), g.end(), out.begin());
}

struct SaddlePoint {
    Vector x_star;
    Vector y_star;

    Vector stacked() const { return concat(x_star, y_star); }
};

inline SaddlePoint origin_saddle(const ProblemSpec& problem) {
    return {Vector(problem.n, 0.0), Vector(problem.m, 0.0)};
}

// ---------------------------------------------------------------------------
// Builtin: exponential-bilinear-quadratic saddle on R^2 x R^2.
//   f(x) = exp((x1+x2)^2),  g(y) = (y1+y2)^2,  K = [[2,2],[2,2]]
// Solution set {x1+x2 = 0, y1+y2 = 0}; minimal-norm solution is the origin.
// ---------------------------------------------------------------------------
inline ProblemSpec example1_problem() {
    ProblemSpec p;
    p.n = 2;
    p.m = 2;
    p.name = "example1";
    p.K = Matrix(2, 2, {2.0, 2.0, 2.0, 2.0});
    p.f_eval = [](const Vector& x) {
        const double s = x[0] + x[1];
        return std::exp(s * s);
    };
    p.f_grad = [](const Vector& x) {
        const double s = x[0] + x[1];
        const double d = 2.0 * s * std::exp(s * s);
        return Vector{d, d};
    };
    p.g_eval = [](const Vector& y) {
        const double s = y[0] + y[1];
        return s * s;
    };
    p.g_grad = [](const Vector& y) {
        const double d = 2.0 * (y[0] + y[1]);
        return Vector{d, d};
    };
    p.f_grad_into = [](std::span<const double> x, std::span<double> out) {
        const double s = x[0] + x[1];
        out[0] = out[1] = 2.0 * s * std::exp(s * s);
    };
    p.g_grad_into = [](std::span<const double> y, std::span<double> out) { out[0] = out[1] = 2.0 * (y[0] + y[1]); };
    return p;
}

/// Euclidean distance from (x, y) to the example1 solution set
/// {x1 + x2 = 0, y1 + y2 = 0}.
inline double example1_solution_distance(std::span<const double> x, std::span<const double> y) {
    const double sx = x[0] + x[1];
    const double sy = y[0] + y[1];
    return std::sqrt(0.5 * (sx * sx + sy * sy));
}

/// Separable quadratic probe  f(x) = ½‖x − u‖², g(y) = ½‖y‖², K = 0 (m×n).
/// Unique saddle (u, 0). Used to exercise the Tikhonov path with a nonzero
/// minimal-norm solution.
inline ProblemSpec shifted_quadratic_problem(Vector shift, std::size_t m) {
    ProblemSpec p;
    p.n = shift.size();
    p.m = m;
    p.name = "quadratic";
    p.K = Matrix(m, p.n);
    p.f_eval = [u = shift](const Vector& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - u[i]) * (x[i] - u[i]);
        return 0.5 * s;
    };
    p.f_grad_into = [u = shift](std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - u[i];
    };
    p.f_grad = [u = std::move(shift)](const Vector& x) { return x - u; };
    p.g_eval = [](const Vector& y) { return 0.5 * squared_norm(y); };
    p.g_grad = [](const Vector& y) { return y; };
    p.g_grad_into = [](std::span<const double> y, std::span<double> out) { std::copy(y.begin(), y.end(), out.begin()); };
    return p;
}

// ---------------------------------------------------------------------------
// Smoothed-L1 regression
// ---------------------------------------------------------------------------

struct RegressionConfig {
    std::size_t m = 100;
    std::size_t n = 200;
    double lambda = 0.1;
    double a = 100.0;
    double kappa = 10.0;
    double sigma_max = 1.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (m < 2) throw ParameterError("m", "must be >= 2");
        if (n < 2) throw ParameterError("n", "must be >= 2");
        if (!(lambda > 0.0)) throw ParameterError("lambda", "must be > 0");
        if (!(a > 0.0)) throw ParameterError("a", "must be > 0");
        if (!(kappa >= 1.0)) throw ParameterError("kappa", "condition number must be >= 1");
        if (!(sigma_max > 0.0)) throw ParameterError("sigma_max", "must be > 0");
    }
};

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) noexcept { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

/// R^a(x) = Σ (1/a)(log(1+exp(a x_i)) + log(1+exp(−a x_i)))
inline double smoothed_l1(std::span<const double> x, double a) noexcept {
    double s = 0.0;
    for (double xi : x) s += softplus(a * xi) + softplus(-a * xi);
    return s / a;
}

inline Vector smoothed_l1_grad(std::span<const double> x, double a) {
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = std::tanh(0.5 * a * x[i]);
    return g;
}

/// K = U Σ Vᵀ with U (m×k), V (n×k) orthonormal, k = min(m, n).
/// σ₁ = sigma_max and σ_k = sigma_max/kappa are pinned; the rest are
/// log-uniform in between. Draw order: U, V, then the interior σ's.
inline Matrix generate_conditioned_matrix(std::size_t m, std::size_t n, double kappa, double sigma_max,
                                          SeededRng& rng) {
    if (m < 2 || n < 2) throw DimensionError("generate_conditioned_matrix requires m, n >= 2");
    if (!(kappa >= 1.0)) throw ParameterError("kappa", "condition number must be >= 1");
    if (!(sigma_max > 0.0)) throw ParameterError("sigma_max", "must be > 0");

    const std::size_t k = std::min(m, n);
    const Matrix u = qr_orthonormal(rng, m, k);
    const Matrix v = qr_orthonormal(rng, n, k);

    std::vector<double> sigma(k);
    sigma.front() = sigma_max;
    sigma.back() = sigma_max / kappa;
    const double log_kappa = std::log(kappa);
    for (std::size_t l = 1; l + 1 < k; ++l) sigma[l] = sigma_max * std::exp(-log_kappa * rng.uniform());

    Matrix out(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t l = 0; l < k; ++l) s += u(i, l) * sigma[l] * v(j, l);
            out(i, j) = s;
        }
    }
    return out;
}

/// A concrete smoothed-L1 regression instance and its saddle reformulation
///   λR^a(x) + <Kx, y> − (½‖y‖² + <b, y>).
struct RegressionInstance {
    RegressionConfig config;
    Matrix K;
    Vector b;
    ProblemSpec problem;
};

inline ProblemSpec regression_saddle_problem(const RegressionConfig& cfg, const Matrix& k, const Vector& b) {
    if (k.rows() != cfg.m || k.cols() != cfg.n || b.size() != cfg.m) {
        throw DimensionError("regression instance: K must be m x n and b of size m");
    }
    ProblemSpec p;
    p.n = cfg.n;
    p.m = cfg.m;
    p.name = "regression";
    p.K = k;
    p.f_eval = [lambda = cfg.lambda, a = cfg.a](const Vector& x) { return lambda * smoothed_l1(x, a); };
    p.f_grad = [lambda = cfg.lambda, a = cfg.a](const Vector& x) {
        Vector g = smoothed_l1_grad(x, a);
        for (double& e : g) e *= lambda;
        return g;
    };
    p.g_eval = [b](const Vector& y) { return 0.5 * squared_norm(y) + dot(b, y); };
    p.g_grad = [b](const Vector& y) { return y + b; };
    p.f_grad_into = [lambda = cfg.lambda, a = cfg.a](std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = lambda * std::tanh(0.5 * a * x[i]);
    };
    p.g_grad_into = [b](std::span<const double> y, std::span<double> out) {
        for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + b[i];
    };
    return p;
}

/// Builds the saddle problem and returns it with b. K is drawn first, then b.
inline std::pair<ProblemSpec, Vector> smoothed_l1_problem(const RegressionConfig& cfg, SeededRng& rng) {
    cfg.validate();
    Matrix k = generate_conditioned_matrix(cfg.m, cfg.n, cfg.kappa, cfg.sigma_max, rng);
    Vector b(cfg.m);
    for (double& e : b) e = normal_sample(rng);
    return {regression_saddle_problem(cfg, k, b), b};
}

/// Instance seeded from cfg.seed.
inline RegressionInstance make_regression_instance(const RegressionConfig& cfg) {
    SeededRng rng(cfg.seed);
    auto [problem, b] = smoothed_l1_problem(cfg, rng);
    Matrix k = problem.K;
    return {cfg, std::move(k), std::move(b), std::move(problem)};
}

/// Φ(x) = ½‖Kx − b‖² + λR^a(x)
inline double primal_objective(const RegressionInstance& inst, std::span<const double> x) {
    if (x.size() != inst.config.n) throw DimensionError("primal_objective: x has wrong size");
    Vector r(inst.config.m);
    matvec_into(inst.K, x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= inst.b[i];
    return 0.5 * squared_norm(r) + inst.config.lambda * smoothed_l1(x, inst.config.a);
}

} // namespace saddleflow
