#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saddleflow/dynamics.hpp"
#include "saddleflow/errors.hpp"
#include "saddleflow/integrator.hpp"
#include "saddleflow/linalg.hpp"
#include "saddleflow/problem.hpp"

namespace saddleflow {

// ===========================================================================
// Energy functions
// ===========================================================================

struct FastEnergy {
    double E1 = 0.0; // t^{2q}β(t)·[gap + (c/2t^p)(‖x‖²+‖y‖²)]
    double E2 = 0.0; // ½‖(α−1)(x−x*) + t^q ẋ‖² + ((α−1)/2)(1 − q t^{q−1})‖x−x*‖²
    double E3 = 0.0; // same in (y, ẏ)
    double total() const noexcept { return E1 + E2 + E3; }
};

struct SlowEnergy {
    double E1 = 0.0; // β(t)·[gap + (c/2t^p)(‖x‖²+‖y‖²)]
    double E2 = 0.0; // ½‖((α−1)/t^q)(x−x*) + ẋ‖² + ((α−1)/2)(q/t^{q+1} + 1/t^{2q})‖x−x*‖²
    double E3 = 0.0;
    double total() const noexcept { return E1 + E2 + E3; }
};

struct EnergyReport {
    double t = 0.0;
    FastEnergy fast;
    SlowEnergy slow;
    double E_tilde = 0.0;

    double E() const noexcept { return fast.total(); }
    double E_hat() const noexcept { return slow.total(); }
};

namespace detail {

// ½‖a(u − u*) + b·v‖² + w‖u − u*‖²
inline double anchored_kinetic(std::span<const double> u, std::span<const double> u_star, std::span<const double> v,
                               double a, double b, double w) {
    double mixed = 0.0;
    double dist = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - u_star[i];
        const double e = a * d + b * v[i];
        mixed += e * e;
        dist += d * d;
    }
    return 0.5 * mixed + w * dist;
}

inline double regularized_gap(const SimState& s, const DynamicsParams& params, const ProblemSpec& problem,
                              const SaddlePoint& saddle) {
    const double gap = primal_dual_gap(problem, saddle, s.x, s.y);
    return gap + params.c / (2.0 * std::pow(s.t, params.p)) * (squared_norm(s.x) + squared_norm(s.y));
}

} // namespace detail

inline FastEnergy energy_fast(const SimState& s, const DynamicsParams& params, const ProblemSpec& problem,
                              const SaddlePoint& saddle) {
    const double t = s.t;
    const double tq = std::pow(t, params.q);
    const double am1 = params.alpha - 1.0;
    const double w = 0.5 * am1 * (1.0 - params.q * std::pow(t, params.q - 1.0));
    FastEnergy e;
    e.E1 = tq * tq * beta_value(params.beta, t) * detail::regularized_gap(s, params, problem, saddle);
    e.E2 = detail::anchored_kinetic(s.x, saddle.x_star, s.vx, am1, tq, w);
    e.E3 = detail::anchored_kinetic(s.y, saddle.y_star, s.vy, am1, tq, w);
    return e;
}

inline SlowEnergy energy_slow(const SimState& s, const DynamicsParams& params, const ProblemSpec& problem,
                              const SaddlePoint& saddle) {
    const double t = s.t;
    const double q = params.q;
    const double tq = std::pow(t, q);
    const double am1 = params.alpha - 1.0;
    const double w = 0.5 * am1 * (q / std::pow(t, q + 1.0) + 1.0 / (tq * tq));
    SlowEnergy e;
    e.E1 = beta_value(params.beta, t) * detail::regularized_gap(s, params, problem, saddle);
    e.E2 = detail::anchored_kinetic(s.x, saddle.x_star, s.vx, am1 / tq, 1.0, w);
    e.E3 = detail::anchored_kinetic(s.y, saddle.y_star, s.vy, am1 / tq, 1.0, w);
    return e;
}

/// Ẽ = Ê − (cβ(t)/2t^p)(‖x̄*‖² + ‖ȳ*‖²), with Ê taken relative to the
/// minimal-norm saddle.
inline double energy_strong(const SimState& s, const DynamicsParams& params, const ProblemSpec& problem,
                            const SaddlePoint& min_norm_saddle) {
    const double correction = params.c * beta_value(params.beta, s.t) / (2.0 * std::pow(s.t, params.p)) *
                              (squared_norm(min_norm_saddle.x_star) + squared_norm(min_norm_saddle.y_star));
    return energy_slow(s, params, problem, min_norm_saddle).total() - correction;
}

/// All three energies relative to one saddle; Ẽ is only meaningful when
/// that saddle is the minimal-norm one.
inline EnergyReport energy_report(const SimState& s, const DynamicsParams& params, const ProblemSpec& problem,
                                  const SaddlePoint& saddle) {
    return {s.t, energy_fast(s, params, problem, saddle), energy_slow(s, params, problem, saddle),
            energy_strong(s, params, problem, saddle)};
}

// ===========================================================================
// Parameter assumptions
// ===========================================================================

enum class ConditionStatus { holds, fails, vacuous };

inline const char* to_string(ConditionStatus s) noexcept {
    switch (s) {
    case ConditionStatus::holds: return "holds";
    case ConditionStatus::fails: return "fails";
    case ConditionStatus::vacuous: return "vacuous";
    }
    return "?";
}

struct ConditionResult {
    std::string name;
    std::string statement;
    ConditionStatus status = ConditionStatus::fails;
    // Earliest t >= t0 from which a pointwise condition holds for good.
    std::optional<double> threshold_t;
    bool sampled = false;
    std::string detail;

    bool holds() const noexcept { return status == ConditionStatus::holds; }
};

/// Verdicts for every parameter condition used by the three convergence
/// regimes:
///   fast   (gap = O(1/(t^{2q}β)), ‖ẋ‖ = O(1/t^q)):  scaling_growth_fast,
///          tikhonov_lower_bound, fast_vanishing_integral
///   slow   (gap = o(1/β)):                          scaling_growth_slow,
///          slow_vanishing_integral
///   strong (trajectory → minimal-norm saddle):      regularization_dominance,
///          slow_vanishing_integral
struct AssumptionReport {
    ConditionResult scaling_growth_fast;     // β̇/β ≤ (α−1)/t^q − 2q/t
    ConditionResult tikhonov_lower_bound;    // q(1−q)/c ≤ t^{2−p} β(t)
    ConditionResult fast_vanishing_integral; // ∫ t^{q−p} β(t) dt < ∞
    ConditionResult scaling_growth_slow;     // ∃M>0: β̇/β ≤ (α−1)/t^q − M/t
    ConditionResult slow_vanishing_integral; // ∫ t^{−q−p} β(t) dt < ∞
    ConditionResult regularization_dominance; // ∃M: β̇/β ≤ (α−1)/t^q − M/t and t^{M−p}β(t) → ∞
    double witness_M = 0.0;
    bool sampled = false;

    bool fast_regime() const noexcept {
        return scaling_growth_fast.holds() && tikhonov_lower_bound.holds() && fast_vanishing_integral.holds();
    }
    bool slow_regime() const noexcept { return scaling_growth_slow.holds() && slow_vanishing_integral.holds(); }
    bool strong_regime() const noexcept {
        return regularization_dominance.holds() && slow_vanishing_integral.holds();
    }

    std::vector<std::string> regimes() const {
        std::vector<std::string> r;
        if (fast_regime()) r.emplace_back("fast");
        if (slow_regime()) r.emplace_back("slow");
        if (strong_regime()) r.emplace_back("strong");
        if (r.empty()) r.emplace_back("none");
        return r;
    }

    std::vector<const ConditionResult*> conditions() const {
        return {&scaling_growth_fast,     &tikhonov_lower_bound,    &fast_vanishing_integral,
                &scaling_growth_slow,     &slow_vanishing_integral, &regularization_dominance};
    }

    /// Earliest time from which every pointwise condition of the fast regime
    /// holds, together with q·t^{q−1} ≤ 1 (nonnegative E2/E3 weights).
    double fast_burn_in(const DynamicsParams& params) const {
        double t1 = std::max(params.t0, std::pow(params.q, 1.0 / (1.0 - params.q)));
        if (scaling_growth_fast.threshold_t) t1 = std::max(t1, *scaling_growth_fast.threshold_t);
        if (tikhonov_lower_bound.threshold_t) t1 = std::max(t1, *tikhonov_lower_bound.threshold_t);
        return t1;
    }
};

/// Largest admissible witness for the M-parameterized conditions.
inline double max_witness_M(const DynamicsParams& params) {
    return params.q * (1.0 + 1.0 / (2.0 * params.alpha - 1.0));
}

namespace detail {

inline std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline ConditionResult make_condition(std::string name, std::string statement) {
    ConditionResult c;
    c.name = std::move(name);
    c.statement = std::move(statement);
    return c;
}

// Power-law integral ∫_{t0}^∞ t^e dt converges iff e < −1.
inline void power_integral(ConditionResult& c, double exponent) {
    c.status = exponent < -1.0 ? ConditionStatus::holds : ConditionStatus::fails;
    c.detail = "integrand exponent " + num(exponent) + (exponent < -1.0 ? " < -1" : " >= -1");
}

// (r + k)/t ≤ (α−1)/t^q  ⇔  t ≥ ((r + k)/(α−1))^{1/(1−q)}
inline void power_growth(ConditionResult& c, const DynamicsParams& params, double r, double k) {
    const double t_star = std::pow((r + k) / (params.alpha - 1.0), 1.0 / (1.0 - params.q));
    c.status = ConditionStatus::holds;
    c.threshold_t = std::max(params.t0, t_star);
    c.detail = "holds for t >= " + num(t_star);
}

// Adaptive Simpson on s = log t.
inline double simpson_log(const std::function<double(double)>& w, double a, double b, double fa, double fm, double fb,
                          double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = w(std::exp(lm)) * std::exp(lm);
    const double frm = w(std::exp(rm)) * std::exp(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
    return simpson_log(w, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_log(w, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate_log(const std::function<double(double)>& w, double t_a, double t_b) {
    const double a = std::log(t_a);
    const double b = std::log(t_b);
    const double fa = w(t_a) * t_a;
    const double fb = w(t_b) * t_b;
    const double m = 0.5 * (a + b);
    const double fm = w(std::exp(m)) * std::exp(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_log(w, a, b, fa, fm, fb, whole, 1e-10 * (1.0 + std::abs(whole)), 40);
}

// Least-squares slope of log w(t) against log t on [t_a, t_b].
inline double tail_exponent(const std::function<double(double)>& w, double t_a, double t_b) {
    constexpr int kPoints = 33;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < kPoints; ++i) {
        const double t = t_a * std::pow(t_b / t_a, static_cast<double>(i) / (kPoints - 1));
        const double lx = std::log(t);
        const double ly = std::log(w(t));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (kPoints * sxy - sx * sy) / (kPoints * sxx - sx * sx);
}

inline constexpr double kExponentMargin = 1e-6;

inline void sampled_integral(ConditionResult& c, const std::function<double(double)>& w, double t0, double t_check) {
    const double partial = integrate_log(w, t0, t_check);
    const double slope = tail_exponent(w, 0.5 * t_check, t_check);
    const bool converges = slope < -1.0 - kExponentMargin;
    c.status = converges ? ConditionStatus::holds : ConditionStatus::fails;
    c.sampled = true;
    c.detail = "sampled, not proven: integral over [" + num(t0) + ", " + num(t_check) + "] = " + num(partial) +
               ", tail exponent " + num(slope);
}

// Pointwise condition margin(t) ≥ 0 on a log grid; threshold is the start of
// the final run of satisfied samples.
inline void sampled_pointwise(ConditionResult& c, const std::function<double(double)>& margin, double t0,
                              double t_check) {
    constexpr int kGrid = 4000;
    std::optional<double> start;
    for (int i = 0; i < kGrid; ++i) {
        const double t = t0 * std::pow(t_check / t0, static_cast<double>(i) / (kGrid - 1));
        if (margin(t) >= 0.0) {
            if (!start) start = t;
        } else {
            start.reset();
        }
    }
    c.sampled = true;
    c.status = start ? ConditionStatus::holds : ConditionStatus::fails;
    c.threshold_t = start;
    c.detail = start ? "sampled, not proven: holds on grid from t = " + num(*start) + " to " + num(t_check)
                     : "sampled, not proven: violated at t = " + num(t_check);
}

} // namespace detail

inline AssumptionReport blank_assumption_report() {
    AssumptionReport rep;
    rep.scaling_growth_fast = detail::make_condition("scaling_growth_fast", "beta'/beta <= (alpha-1)/t^q - 2q/t");
    rep.tikhonov_lower_bound = detail::make_condition("tikhonov_lower_bound", "q(1-q)/c <= t^(2-p) beta(t)");
    rep.fast_vanishing_integral =
        detail::make_condition("fast_vanishing_integral", "int t^(q-p) beta(t) dt < inf");
    rep.scaling_growth_slow =
        detail::make_condition("scaling_growth_slow", "exists M>0: beta'/beta <= (alpha-1)/t^q - M/t");
    rep.slow_vanishing_integral =
        detail::make_condition("slow_vanishing_integral", "int t^(-q-p) beta(t) dt < inf");
    rep.regularization_dominance = detail::make_condition(
        "regularization_dominance", "exists M>0: beta'/beta <= (alpha-1)/t^q - M/t and t^(M-p) beta(t) -> inf");
    return rep;
}

namespace detail {

// Without regularization the c-dependent conditions say nothing.
inline void mark_unregularized(AssumptionReport& rep) {
    rep.tikhonov_lower_bound.status = ConditionStatus::fails;
    rep.tikhonov_lower_bound.threshold_t.reset();
    rep.tikhonov_lower_bound.detail = "c = 0: q(1-q)/c is unbounded";
    for (ConditionResult* c :
         {&rep.fast_vanishing_integral, &rep.slow_vanishing_integral, &rep.regularization_dominance}) {
        c->status = ConditionStatus::vacuous;
        c->detail = "c = 0: no Tikhonov term; " + c->detail;
    }
}

} // namespace detail

/// Generic path: every condition is sampled on a log grid over [t0, t_check]
/// and integrals are judged by their tail exponent on [t_check/2, t_check].
/// Works for any scaling; verdicts are labeled as sampled.
inline AssumptionReport check_assumptions_sampled(const DynamicsParams& params, double t_check = 1e6) {
    params.validate(t_check);
    using detail::num;
    AssumptionReport rep = blank_assumption_report();
    rep.sampled = true;
    rep.witness_M = max_witness_M(params);
    const double t0 = params.t0;
    const double alpha = params.alpha, q = params.q, p = params.p, c = params.c, M = rep.witness_M;
    const ScalingSpec& beta = params.beta;

    auto log_rate = [&beta](double t) { return beta_rate(beta, t) / beta_value(beta, t); };
    detail::sampled_pointwise(
        rep.scaling_growth_fast, [&](double t) { return (alpha - 1.0) / std::pow(t, q) - 2.0 * q / t - log_rate(t); },
        t0, t_check);
    if (c > 0.0) {
        detail::sampled_pointwise(
            rep.tikhonov_lower_bound,
            [&](double t) { return std::pow(t, 2.0 - p) * beta_value(beta, t) - q * (1.0 - q) / c; }, t0, t_check);
    }
    detail::sampled_integral(
        rep.fast_vanishing_integral, [&](double t) { return std::pow(t, q - p) * beta_value(beta, t); }, t0, t_check);
    detail::sampled_pointwise(
        rep.scaling_growth_slow, [&](double t) { return (alpha - 1.0) / std::pow(t, q) - M / t - log_rate(t); }, t0,
        t_check);
    rep.scaling_growth_slow.detail += "; witness M = " + num(M);
    detail::sampled_integral(
        rep.slow_vanishing_integral, [&](double t) { return std::pow(t, -q - p) * beta_value(beta, t); }, t0,
        t_check);

    const double growth =
        detail::tail_exponent([&](double t) { return std::pow(t, M - p) * beta_value(beta, t); }, 0.5 * t_check,
                              t_check);
    ConditionResult& dom = rep.regularization_dominance;
    dom.sampled = true;
    if (rep.scaling_growth_slow.holds() && growth > detail::kExponentMargin) {
        dom.status = ConditionStatus::holds;
        dom.threshold_t = rep.scaling_growth_slow.threshold_t;
    } else {
        dom.status = ConditionStatus::fails;
    }
    dom.detail = "sampled, not proven: witness M = " + num(M) + ", tail exponent of t^(M-p) beta = " + num(growth);

    if (c == 0.0) detail::mark_unregularized(rep);
    return rep;
}

/// Verdicts for the current parameters. Power-law scaling β = t^r is decided
/// in closed form; custom scaling falls back to check_assumptions_sampled.
inline AssumptionReport check_assumptions(const DynamicsParams& params, double t_check = 1e6) {
    const auto* pl = std::get_if<PowerLaw>(&params.beta);
    if (pl == nullptr) return check_assumptions_sampled(params, t_check);
    params.validate();
    using detail::num;

    const double r = pl->r, q = params.q, p = params.p, c = params.c, t0 = params.t0;
    AssumptionReport rep = blank_assumption_report();
    rep.witness_M = max_witness_M(params);

    detail::power_growth(rep.scaling_growth_fast, params, r, 2.0 * q);

    // q(1−q)/c ≤ t^e with e = 2 − p + r
    ConditionResult& tl = rep.tikhonov_lower_bound;
    if (c > 0.0) {
        const double lhs = q * (1.0 - q) / c;
        const double e = 2.0 - p + r;
        if (e > 0.0) {
            const double t_star = std::pow(lhs, 1.0 / e);
            tl.status = ConditionStatus::holds;
            tl.threshold_t = std::max(t0, t_star);
            tl.detail = num(lhs) + " <= t^" + num(e) + " for t >= " + num(t_star);
        } else if (e == 0.0) {
            tl.status = lhs <= 1.0 ? ConditionStatus::holds : ConditionStatus::fails;
            if (tl.holds()) tl.threshold_t = t0;
            tl.detail = num(lhs) + (lhs <= 1.0 ? " <= 1" : " > 1") + " (exponent 0)";
        } else {
            tl.status = ConditionStatus::fails;
            tl.detail = "t^" + num(e) + " -> 0 so the bound " + num(lhs) + " fails eventually";
        }
    }

    detail::power_integral(rep.fast_vanishing_integral, q - p + r);
    rep.fast_vanishing_integral.threshold_t = t0;
    if (!rep.fast_vanishing_integral.holds()) rep.fast_vanishing_integral.threshold_t.reset();

    detail::power_growth(rep.scaling_growth_slow, params, r, rep.witness_M);
    rep.scaling_growth_slow.detail += "; witness M = " + num(rep.witness_M);

    detail::power_integral(rep.slow_vanishing_integral, -q - p + r);
    rep.slow_vanishing_integral.threshold_t = t0;
    if (!rep.slow_vanishing_integral.holds()) rep.slow_vanishing_integral.threshold_t.reset();

    // t^{M−p+r} → ∞ for some admissible M  ⇔  p − r < M_max
    ConditionResult& dom = rep.regularization_dominance;
    const double growth = rep.witness_M - p + r;
    dom.status = growth > 0.0 ? ConditionStatus::holds : ConditionStatus::fails;
    if (dom.holds()) dom.threshold_t = rep.scaling_growth_slow.threshold_t;
    dom.detail = "witness M = " + num(rep.witness_M) + ", exponent M-p+r = " + num(growth);

    if (c == 0.0) detail::mark_unregularized(rep);
    return rep;
}

// ===========================================================================
// Rate fitting
// ===========================================================================

struct RateFit {
    double t_a = 0.0;
    double t_b = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};

inline constexpr double kLogFloor = 1e-16;

/// Replaces values below `floor` by `floor`; returns how many were replaced.
inline std::size_t apply_floor(std::span<double> values, double floor = kLogFloor) {
    std::size_t count = 0;
    for (double& v : values) {
        if (v < floor) {
            v = floor;
            ++count;
        }
    }
    return count;
}

/// Least-squares line through (log t, log value) over t ∈ [t_a, t_b].
inline RateFit fit_rate(std::span<const double> t, std::span<const double> value, double t_a, double t_b) {
    if (t.size() != value.size()) throw DimensionError("fit_rate: time and value columns differ in length");
    if (!(t_a < t_b)) throw DataError("fit_rate: window requires t_a < t_b");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_a || t[i] > t_b) continue;
        if (!(value[i] > 0.0) || !(t[i] > 0.0)) {
            throw DataError("fit_rate: nonpositive value " + detail::num(value[i]) + " at t = " + detail::num(t[i]));
        }
        const double lx = std::log(t[i]);
        const double ly = std::log(value[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++count;
    }
    if (count < 10) {
        throw DataError("fit_rate: " + std::to_string(count) + " samples in window, need at least 10");
    }
    const double n = static_cast<double>(count);
    const double sxx_c = sxx - sx * sx / n;
    const double sxy_c = sxy - sx * sy / n;
    RateFit fit;
    fit.t_a = t_a;
    fit.t_b = t_b;
    fit.points = count;
    fit.slope = sxy_c / sxx_c;
    fit.intercept = (sy - fit.slope * sx) / n;
    // Residual sum of squares computed directly; the centered-moment shortcut
    // loses everything to cancellation when the fit is exact.
    double ss_res = 0.0;
    const double mean_y = sy / n;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_a || t[i] > t_b) continue;
        const double ly = std::log(value[i]);
        const double pred = fit.intercept + fit.slope * std::log(t[i]);
        ss_res += (ly - pred) * (ly - pred);
        ss_tot += (ly - mean_y) * (ly - mean_y);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

// ===========================================================================
// Lyapunov audit
// ===========================================================================

struct LyapunovAudit {
    double t_start = 0.0;
    std::size_t pairs_checked = 0;
    // max_k [E(t_{k+1}) − E(t_k) − source_k − slack_k]; ≤ 0 means certified.
    double max_excess = -std::numeric_limits<double>::infinity();
    double worst_t = 0.0;
    double max_relative_increase = -std::numeric_limits<double>::infinity();
    bool passed = true;
};

struct AuditTolerance {
    double relative = 1e-9;
    double absolute = 1e-12;
};

/// Checks E(t_{k+1}) − E(t_k) ≤ ∫_{t_k}^{t_{k+1}} ((α−1)c/2) s^{q−p} β(s) ds·(‖x*‖²+‖y*‖²)
/// (trapezoid rule) on consecutive samples from the fast-regime burn-in on.
inline LyapunovAudit lyapunov_audit(const Trajectory& traj, const DynamicsParams& params, const ProblemSpec& problem,
                                    const SaddlePoint& saddle, AuditTolerance tol = {}) {
    LyapunovAudit audit;
    const AssumptionReport assumptions = check_assumptions(params);
    audit.t_start = assumptions.fast_burn_in(params);
    const double anchor = squared_norm(saddle.x_star) + squared_norm(saddle.y_star);
    auto source_density = [&](double s) {
        return 0.5 * (params.alpha - 1.0) * params.c * std::pow(s, params.q - params.p) * beta_value(params.beta, s) *
               anchor;
    };

    std::optional<double> prev_e;
    double prev_t = 0.0;
    for (const SimState& s : traj.samples) {
        if (s.t < audit.t_start) continue;
        const double e = energy_fast(s, params, problem, saddle).total();
        if (prev_e) {
            const double source = 0.5 * (s.t - prev_t) * (source_density(prev_t) + source_density(s.t));
            const double increase = e - *prev_e - source;
            const double excess = increase - (tol.relative * std::abs(*prev_e) + tol.absolute);
            ++audit.pairs_checked;
            if (excess > audit.max_excess) {
                audit.max_excess = excess;
                audit.worst_t = s.t;
            }
            const double rel = *prev_e != 0.0 ? increase / std::abs(*prev_e) : increase;
            audit.max_relative_increase = std::max(audit.max_relative_increase, rel);
            if (excess > 0.0) audit.passed = false;
        }
        prev_e = e;
        prev_t = s.t;
    }
    return audit;
}

} // namespace saddleflow
