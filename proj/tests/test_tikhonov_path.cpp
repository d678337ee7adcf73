#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "saddleflow/tikhonov_path.hpp"

using namespace saddleflow;

namespace {

const Vector kShift{1.0, -2.0};

} // namespace

TEST(PhiGrad, ZeroAtOriginForBuiltin) {
    const ProblemSpec p = example1_problem();
    for (double g : phi_grad(p, origin_saddle(p), Vector(4, 0.0))) EXPECT_EQ(g, 0.0);
}

TEST(PhiGrad, MatchesFiniteDifferences) {
    std::mt19937_64 gen(41);
    const ProblemSpec p = example1_problem();
    const SaddlePoint sp{{0.5, -0.5}, {1.0, -1.0}};
    for (int probe = 0; probe < 100; ++probe) {
        const Vector z = oracle::random_vector(gen, 4, 0.4);
        const Vector fd = oracle::fd_gradient([&](const Vector& v) { return phi_value(p, sp, v); }, z);
        const Vector g = phi_grad(p, sp, z);
        EXPECT_LE(distance(g, fd), 1e-6 * std::max(1.0, norm(fd)));
    }
}

TEST(PhiValue, ZeroOnSolutionSet) {
    const ProblemSpec p = example1_problem();
    EXPECT_NEAR(phi_value(p, origin_saddle(p), Vector{1, -1, 2, -2}), 0.0, 1e-15);
    EXPECT_NEAR(phi_value(p, SaddlePoint{{3, -3}, {0.5, -0.5}}, Vector{0, 0, 0, 0}), 0.0, 1e-15);
}

TEST(SolveRegularized, BuiltinCurveIsOrigin) {
    const ProblemSpec p = example1_problem();
    std::mt19937_64 gen(42);
    for (double eps : {1.0, 0.1, 0.01}) {
        const PathPoint pt = solve_regularized(p, origin_saddle(p), eps, oracle::random_vector(gen, 4, 0.5));
        EXPECT_LE(norm(pt.z), 1e-8) << eps;
        EXPECT_LE(pt.grad_norm, 1e-10);
    }
}

TEST(SolveRegularized, CenteredQuadraticCurveIsOrigin) {
    const ProblemSpec p = shifted_quadratic_problem({0.0, 0.0}, 2);
    const PathPoint pt = solve_regularized(p, origin_saddle(p), 0.3, Vector{1, 2, 3, 4});
    EXPECT_LE(norm(pt.z), 1e-9);
}

TEST(SolveRegularized, ShiftedQuadraticClosedForm) {
    const ProblemSpec p = shifted_quadratic_problem(kShift, 1);
    const SaddlePoint sp{kShift, {0.0}};
    for (double eps : {1.0, 0.5, 1e-3}) {
        const PathPoint pt = solve_regularized(p, sp, eps, Vector(3, 0.0));
        EXPECT_NEAR(pt.z[0], kShift[0] / (1 + eps), 1e-10);
        EXPECT_NEAR(pt.z[1], kShift[1] / (1 + eps), 1e-10);
        EXPECT_NEAR(pt.z[2], 0.0, 1e-10);
    }
}

TEST(SolveRegularized, ObjectiveDecreasesMonotonically) {
    const ProblemSpec p = example1_problem();
    RegularizedSolveOptions opts;
    opts.record_objective = true;
    const PathPoint pt = solve_regularized(p, origin_saddle(p), 0.05, Vector{0.8, 0.1, -0.4, 0.9}, opts);
    ASSERT_GT(pt.objective_history.size(), 2u);
    for (std::size_t k = 1; k < pt.objective_history.size(); ++k) {
        EXPECT_LE(pt.objective_history[k], pt.objective_history[k - 1]);
    }
}

TEST(SolveRegularized, BlocksAreDecoupled) {
    const ProblemSpec p = example1_problem();
    const SaddlePoint sp{{0.3, -0.3}, {0.2, -0.2}};
    const PathPoint a = solve_regularized(p, sp, 0.5, Vector{0.7, 0.2, 5.0, -3.0});
    const PathPoint b = solve_regularized(p, sp, 0.5, Vector{0.7, 0.2, -1.0, 0.0});
    const PathPoint c = solve_regularized(p, sp, 0.5, Vector{-2.0, 1.0, 5.0, -3.0});
    EXPECT_NEAR(a.z[0], b.z[0], 1e-10);
    EXPECT_NEAR(a.z[1], b.z[1], 1e-10);
    EXPECT_NEAR(a.z[2], c.z[2], 1e-10);
    EXPECT_NEAR(a.z[3], c.z[3], 1e-10);
}

TEST(SolveRegularized, IterationCapRaisesPathError) {
    const ProblemSpec p = example1_problem();
    RegularizedSolveOptions opts;
    opts.max_iterations = 2;
    EXPECT_THROW(solve_regularized(p, origin_saddle(p), 1e-6, Vector{1, 2, 3, 4}, opts), PathError);
    EXPECT_THROW(solve_regularized(p, origin_saddle(p), 0.0, Vector(4, 0.0)), ParameterError);
}

TEST(MinNorm, BuiltinIsOrigin) {
    const ProblemSpec p = example1_problem();
    const MinNormSolution sol = min_norm_solution(p, SaddlePoint{{2, -2}, {-1, 1}});
    EXPECT_LE(norm(sol.z_bar), 1e-6);
    EXPECT_LE(sol.kkt_residual, 1e-8);
    for (const PathPoint& pt : sol.path) EXPECT_LE(norm(pt.z), 0.0 + 1e-9 + norm(sol.z_bar));
}

TEST(MinNorm, ShiftedQuadraticIsUniqueSaddle) {
    const ProblemSpec p = shifted_quadratic_problem(kShift, 1);
    const MinNormSolution sol = min_norm_solution(p, SaddlePoint{kShift, {0.0}});
    const Vector expected{1.0, -2.0, 0.0};
    EXPECT_LE(distance(sol.z_bar, expected), 1e-6);
    EXPECT_LE(sol.kkt_residual, 1e-8);
    EXPECT_LE(sol.cauchy_gap, 1e-7);
    for (const PathPoint& pt : sol.path) EXPECT_LE(norm(pt.z), norm(expected) + 1e-9);
}

TEST(MinNorm, ScheduleValidation) {
    const ProblemSpec p = example1_problem();
    const SaddlePoint o = origin_saddle(p);
    EXPECT_THROW(min_norm_solution(p, o, {1.0}), ParameterError);
    EXPECT_THROW(min_norm_solution(p, o, {1.0, 1.0, 1e-9}), ParameterError);
    EXPECT_THROW(min_norm_solution(p, o, {1.0, 0.1, 1e-3}), ParameterError);
    EXPECT_THROW(min_norm_solution(p, o, {1.0, -1.0, 1e-9}), ParameterError);
}

TEST(MinNorm, UnconvergedPathRaises) {
    // Cauchy gap at 1e-8 is about 9e-8·‖u‖, above 1e-7 once ‖u‖ > 1.2.
    const Vector big{10.0, -10.0};
    const ProblemSpec p = shifted_quadratic_problem(big, 1);
    EXPECT_THROW(min_norm_solution(p, SaddlePoint{big, {0.0}}, default_epsilon_schedule(8)), PathError);
}

TEST(CurveInequality, EqualityAtMinimalNormSaddle) {
    const ProblemSpec p = example1_problem();
    const CurveInequalityResult r = curve_inequality_check(p, origin_saddle(p), Vector(4, 0.0), 0.1);
    EXPECT_NEAR(r.lhs, 0.0, 1e-15);
    EXPECT_NEAR(r.rhs, 0.0, 1e-15);
    EXPECT_TRUE(r.holds);
}

TEST(CurveInequality, RandomProbesOnBuiltin) {
    const ProblemSpec p = example1_problem();
    const SaddlePoint o = origin_saddle(p);
    std::mt19937_64 gen(43);
    for (double eps : {1.0, 0.1, 0.01}) {
        const Vector z_eps = solve_regularized(p, o, eps, Vector(4, 0.0)).z;
        for (int probe = 0; probe < 100; ++probe) {
            const CurveInequalityResult r = curve_inequality_check(p, o, oracle::random_vector(gen, 4), eps, z_eps);
            EXPECT_TRUE(r.holds) << "lhs " << r.lhs << " rhs " << r.rhs;
        }
    }
}

TEST(CurveInequality, ShiftedQuadraticHasStrictSlack) {
    const ProblemSpec p = shifted_quadratic_problem(kShift, 1);
    const SaddlePoint sp{kShift, {0.0}};
    const CurveInequalityResult r = curve_inequality_check(p, sp, Vector(3, 0.0), 1.0);
    // z_1 = u/2: lhs = ½(‖u/2‖² + ‖u/2‖² − ‖u‖²) = −‖u‖²/4; rhs = ½‖u‖² − ½‖u‖² = 0.
    EXPECT_NEAR(r.lhs, -5.0 / 4.0, 1e-9);
    EXPECT_NEAR(r.rhs, 0.0, 1e-12);
    EXPECT_TRUE(r.holds);
    EXPECT_GT(r.rhs - r.lhs, 1.0);
}
