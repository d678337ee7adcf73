#pragma once

// Independent reference computations used by the test suite. Nothing here
// calls into the library's energy or right-hand-side code.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "saddleflow/dynamics.hpp"
#include "saddleflow/linalg.hpp"
#include "saddleflow/problem.hpp"

namespace oracle {

using saddleflow::Matrix;
using saddleflow::Vector;

inline Vector random_vector(std::mt19937_64& gen, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Vector v(n);
    for (double& e : v) e = dist(gen);
    return v;
}

inline Eigen::MatrixXd to_eigen(const Matrix& a) {
    Eigen::MatrixXd m(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
    return m;
}

inline Eigen::VectorXd singular_values(const Matrix& a) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(to_eigen(a)).singularValues();
}

/// ‖A‖₂ by power iteration on AᵀA.
inline double spectral_norm(const Matrix& a, int iterations = 500) {
    Eigen::MatrixXd m = to_eigen(a);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(m.cols()).normalized();
    double lambda = 0.0;
    for (int k = 0; k < iterations; ++k) {
        Eigen::VectorXd w = m.transpose() * (m * v);
        lambda = w.norm();
        v = w / lambda;
    }
    return std::sqrt(lambda);
}

/// Central finite-difference gradient with step h = 1e-5·(1 + ‖x‖).
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x) {
    double nx = 0.0;
    for (double e : x) nx += e * e;
    const double h = 1e-5 * (1.0 + std::sqrt(nx));
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

inline double sq(const Vector& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return s;
}

inline double coupling(const Matrix& k, const Vector& x, const Vector& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < k.rows(); ++i)
        for (std::size_t j = 0; j < k.cols(); ++j) s += y[i] * k(i, j) * x[j];
    return s;
}

inline double lagrangian_direct(const saddleflow::ProblemSpec& p, const Vector& x, const Vector& y) {
    return p.f_eval(x) + coupling(p.K, x, y) - p.g_eval(y);
}

inline double beta_pow(const saddleflow::DynamicsParams& prm, double t) {
    return std::pow(t, std::get<saddleflow::PowerLaw>(prm.beta).r);
}

/// E(t), written with the squares expanded:
///   ½(α−1)²‖d‖² + (α−1)t^q<d, v> + ½t^{2q}‖v‖² + ((α−1)/2)(1 − q t^{q−1})‖d‖²
inline double energy_E(const saddleflow::SimState& s, const saddleflow::DynamicsParams& prm,
                       const saddleflow::ProblemSpec& p, const Vector& xs, const Vector& ys) {
    const double t = s.t, a = prm.alpha, q = prm.q;
    const double gap = lagrangian_direct(p, s.x, ys) - lagrangian_direct(p, xs, s.y);
    const double reg = prm.c / (2.0 * std::pow(t, prm.p)) * (sq(s.x) + sq(s.y));
    const double e1 = std::pow(t, 2.0 * q) * beta_pow(prm, t) * (gap + reg);
    auto block = [&](const Vector& u, const Vector& us, const Vector& v) {
        double dd = 0.0, dv = 0.0, vv = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double d = u[i] - us[i];
            dd += d * d;
            dv += d * v[i];
            vv += v[i] * v[i];
        }
        return 0.5 * (a - 1.0) * (a - 1.0) * dd + (a - 1.0) * std::pow(t, q) * dv + 0.5 * std::pow(t, 2.0 * q) * vv +
               0.5 * (a - 1.0) * (1.0 - q * std::pow(t, q - 1.0)) * dd;
    };
    return e1 + block(s.x, xs, s.vx) + block(s.y, ys, s.vy);
}

/// Ê(t), squares expanded as above.
inline double energy_E_hat(const saddleflow::SimState& s, const saddleflow::DynamicsParams& prm,
                           const saddleflow::ProblemSpec& p, const Vector& xs, const Vector& ys) {
    const double t = s.t, a = prm.alpha, q = prm.q;
    const double gap = lagrangian_direct(p, s.x, ys) - lagrangian_direct(p, xs, s.y);
    const double reg = prm.c / (2.0 * std::pow(t, prm.p)) * (sq(s.x) + sq(s.y));
    const double e1 = beta_pow(prm, t) * (gap + reg);
    const double k = (a - 1.0) / std::pow(t, q);
    auto block = [&](const Vector& u, const Vector& us, const Vector& v) {
        double dd = 0.0, dv = 0.0, vv = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double d = u[i] - us[i];
            dd += d * d;
            dv += d * v[i];
            vv += v[i] * v[i];
        }
        return 0.5 * k * k * dd + k * dv + 0.5 * vv +
               0.5 * (a - 1.0) * (q / std::pow(t, q + 1.0) + 1.0 / std::pow(t, 2.0 * q)) * dd;
    };
    return e1 + block(s.x, xs, s.vx) + block(s.y, ys, s.vy);
}

inline double energy_E_tilde(const saddleflow::SimState& s, const saddleflow::DynamicsParams& prm,
                             const saddleflow::ProblemSpec& p, const Vector& xs, const Vector& ys) {
    return energy_E_hat(s, prm, p, xs, ys) -
           prm.c * beta_pow(prm, s.t) / (2.0 * std::pow(s.t, prm.p)) * (sq(xs) + sq(ys));
}

/// Right-hand side for any problem, written directly from the second-order
/// system with dense loops and power-law β.
struct Derivative {
    Vector dvx, dvy;
};

inline Derivative rhs(const saddleflow::SimState& s, const saddleflow::DynamicsParams& prm,
                      const saddleflow::ProblemSpec& p) {
    const double t = s.t;
    const double damp = prm.alpha / std::pow(t, prm.q);
    const double ext = std::pow(t, prm.q) / (prm.alpha - 1.0);
    const double b = beta_pow(prm, t);
    const double reg = prm.c / std::pow(t, prm.p);
    const Vector gf = p.f_grad(s.x);
    const Vector gg = p.g_grad(s.y);
    Derivative d{Vector(p.n), Vector(p.m)};
    for (std::size_t j = 0; j < p.n; ++j) {
        double kty = 0.0;
        for (std::size_t i = 0; i < p.m; ++i) kty += p.K(i, j) * (s.y[i] + ext * s.vy[i]);
        d.dvx[j] = -damp * s.vx[j] - b * (gf[j] + kty + reg * s.x[j]);
    }
    for (std::size_t i = 0; i < p.m; ++i) {
        double kx = 0.0;
        for (std::size_t j = 0; j < p.n; ++j) kx += p.K(i, j) * (s.x[j] + ext * s.vx[j]);
        d.dvy[i] = -damp * s.vy[i] + b * (kx - gg[i] - reg * s.y[i]);
    }
    return d;
}

/// Unregularized system for the exponential-bilinear-quadratic builtin in
/// scalar form (sx = x1 + x2, sy = y1 + y2).
inline Derivative example1_rhs_unregularized(const saddleflow::SimState& s, const saddleflow::DynamicsParams& prm) {
    const double t = s.t;
    const double damp = prm.alpha / std::pow(t, prm.q);
    const double ext = std::pow(t, prm.q) / (prm.alpha - 1.0);
    const double b = beta_pow(prm, t);
    const double sx = s.x[0] + s.x[1], sy = s.y[0] + s.y[1];
    const double svx = s.vx[0] + s.vx[1], svy = s.vy[0] + s.vy[1];
    const double fx = 2.0 * sx * std::exp(sx * sx) + 2.0 * (sy + ext * svy);
    const double gy = 2.0 * (sx + ext * svx) - 2.0 * sy;
    return {{-damp * s.vx[0] - b * fx, -damp * s.vx[1] - b * fx}, {-damp * s.vy[0] + b * gy, -damp * s.vy[1] + b * gy}};
}

inline saddleflow::SimState random_state(std::mt19937_64& gen, double t, std::size_t n, std::size_t m,
                                         double scale = 0.5) {
    return {t, random_vector(gen, n, scale), random_vector(gen, m, scale), random_vector(gen, n, scale),
            random_vector(gen, m, scale)};
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

} // namespace oracle
