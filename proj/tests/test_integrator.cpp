#include <gtest/gtest.h>

#include <cmath>

#include "saddleflow/diagnostics.hpp"
#include "saddleflow/experiments.hpp"
#include "saddleflow/integrator.hpp"

using namespace saddleflow;

namespace {

DynamicsParams paper_params(double c = 1.0) { return {3.0, 0.8, 0.8, c, PowerLaw{0.5}, 1.0}; }

// ẏ = −y on [0, 1] through the generic stepper.
double decay_endpoint(double rel_tol, double abs_tol) {
    IntegratorConfig cfg;
    cfg.rel_tol = rel_tol;
    cfg.abs_tol = abs_tol;
    cfg.t_end = 1.0;
    cfg.h_min = 1e-14;
    const std::vector<double> times{0.0, 1.0};
    double end = 0.0;
    dopri5([](double, std::span<const double> z, std::span<double> dz) { dz[0] = -z[0]; }, 0.0, Vector{1.0}, cfg,
           times, [&](std::size_t k, double, std::span<const double> z) {
               if (k == 1) end = z[0];
           });
    return end;
}

} // namespace

TEST(Dopri5, ExponentialDecay) { EXPECT_NEAR(decay_endpoint(1e-9, 1e-12), std::exp(-1.0), 1e-8); }

TEST(Dopri5, ErrorDecreasesWithTolerance) {
    double prev = 1.0;
    for (int k = 6; k <= 12; ++k) {
        const double tol = std::pow(10.0, -k);
        const double err = std::abs(decay_endpoint(tol, tol) - std::exp(-1.0));
        EXPECT_LT(err, prev) << "rel_tol 1e-" << k;
        prev = err;
    }
}

TEST(Dopri5, DenseOutputMatchesStepEndpoints) {
    IntegratorConfig cfg;
    cfg.t_end = 10.0;
    const std::vector<double> times{0.0, 10.0};
    std::size_t steps = 0;
    double worst = 0.0;
    double min_step = 1e300;
    auto system = [](double t, std::span<const double> z, std::span<double> dz) {
        dz[0] = z[1];
        dz[1] = -z[0] + 0.1 * std::sin(t);
    };
    dopri5(system, 0.0, Vector{1.0, 0.0}, cfg, times, [](std::size_t, double, std::span<const double>) {},
           [&](const DenseStep& dense, std::span<const double> z_new) {
               const Vector at_end = dense.interpolate(dense.t_old + dense.h);
               for (std::size_t i = 0; i < z_new.size(); ++i) {
                   worst = std::max(worst, std::abs(at_end[i] - z_new[i]) / std::max(1.0, std::abs(z_new[i])));
               }
               min_step = std::min(min_step, dense.h);
               ++steps;
           });
    EXPECT_GT(steps, 10u);
    EXPECT_LE(worst, 1e-13);
    EXPECT_GE(min_step, cfg.h_min);
}

TEST(Dopri5, BlowUpRaisesWithLastGoodTime) {
    IntegratorConfig cfg;
    cfg.t_end = 2.0;
    cfg.h_min = 1e-9;
    const std::vector<double> times{0.0, 2.0};
    try {
        dopri5([](double, std::span<const double> z, std::span<double> dz) { dz[0] = z[0] * z[0]; }, 0.0,
               Vector{1.0}, cfg, times, [](std::size_t, double, std::span<const double>) {});
        FAIL() << "expected IntegrationError";
    } catch (const IntegrationError& e) {
        EXPECT_GT(e.last_time(), 0.9);
        EXPECT_LT(e.last_time(), 1.0);
        ASSERT_EQ(e.last_phase().size(), 1u);
        EXPECT_TRUE(std::isfinite(e.last_phase()[0]));
    }
}

TEST(Integrate, ZeroStateStaysZero) {
    IntegratorConfig cfg;
    cfg.t_end = 20.0;
    const Trajectory traj = integrate(SimState::zeros(1.0, 2, 2), paper_params(), example1_problem(), cfg);
    EXPECT_EQ(traj.rejected_steps, 0u);
    for (const SimState& s : traj.samples)
        for (double v : s.pack()) ASSERT_EQ(v, 0.0);
}

TEST(Integrate, RegularizedRunApproachesOrigin) {
    IntegratorConfig cfg;
    cfg.t_end = 20.0;
    cfg.h_max = 0.5;
    const Trajectory traj = integrate(example1_initial_state(), paper_params(), example1_problem(), cfg);
    const SimState& last = traj.samples.back();
    EXPECT_EQ(last.t, 20.0);
    EXPECT_LT(norm(concat(last.x, last.y)), 0.1);
}

TEST(Integrate, SampleGridEndpointsExact) {
    IntegratorConfig cfg;
    cfg.t_end = 7.5;
    cfg.sample_count = 33;
    for (Sampling mode : {Sampling::log, Sampling::linear}) {
        cfg.sampling = mode;
        const auto ts = sample_times(1.0, cfg);
        ASSERT_EQ(ts.size(), 33u);
        EXPECT_EQ(ts.front(), 1.0);
        EXPECT_EQ(ts.back(), 7.5);
        for (std::size_t k = 1; k < ts.size(); ++k) EXPECT_GT(ts[k], ts[k - 1]);
    }
    cfg.sampling = Sampling::linear;
    cfg.t_end = 500.0;
    cfg.sample_count = 500;
    const auto ts = sample_times(1.0, cfg);
    EXPECT_NEAR(ts[49], 50.0, 1e-12);
    EXPECT_NEAR(ts[124], 125.0, 1e-12);
}

TEST(Integrate, MonitorSeesEverySample) {
    IntegratorConfig cfg;
    cfg.t_end = 10.0;
    cfg.sample_count = 123;
    std::size_t count = 0;
    integrate_with_monitor(example1_initial_state(), paper_params(), example1_problem(), cfg,
                           [&](const SimState&) { ++count; });
    EXPECT_EQ(count, cfg.sample_count);
}

TEST(Integrate, MonitoredGapMatchesPostHoc) {
    IntegratorConfig cfg;
    cfg.t_end = 10.0;
    const ProblemSpec p = example1_problem();
    const SaddlePoint o = origin_saddle(p);
    std::vector<double> gaps;
    const Trajectory traj = integrate_with_monitor(example1_initial_state(), paper_params(), p, cfg,
                                                   [&](const SimState& s) { gaps.push_back(primal_dual_gap(p, o, s.x, s.y)); });
    ASSERT_EQ(gaps.size(), traj.samples.size());
    for (std::size_t k = 0; k < gaps.size(); ++k) {
        EXPECT_LE(std::abs(gaps[k] - primal_dual_gap(p, o, traj.samples[k].x, traj.samples[k].y)), 1e-12);
    }
}

TEST(Integrate, NoOpMonitorDoesNotInterfere) {
    IntegratorConfig cfg;
    cfg.t_end = 10.0;
    const Trajectory a = integrate(example1_initial_state(), paper_params(), example1_problem(), cfg);
    const Trajectory b =
        integrate_with_monitor(example1_initial_state(), paper_params(), example1_problem(), cfg, [](const SimState&) {});
    EXPECT_EQ(a, b);
}

TEST(Integrate, Deterministic) {
    IntegratorConfig cfg;
    cfg.t_end = 15.0;
    const Trajectory a = integrate(example1_initial_state(), paper_params(0.0), example1_problem(), cfg);
    const Trajectory b = integrate(example1_initial_state(), paper_params(0.0), example1_problem(), cfg);
    EXPECT_EQ(a, b);
}

TEST(Integrate, MonitorFailureIsReported) {
    IntegratorConfig cfg;
    cfg.t_end = 5.0;
    EXPECT_THROW(integrate_with_monitor(example1_initial_state(), paper_params(), example1_problem(), cfg,
                                        [](const SimState& s) {
                                            if (s.t > 2.0) throw NumericalError("boom");
                                        }),
                 MonitorError);
}

TEST(Integrate, RejectsInvalidInputs) {
    IntegratorConfig cfg;
    cfg.t_end = 0.5;
    EXPECT_THROW(integrate(example1_initial_state(), paper_params(), example1_problem(), cfg), ParameterError);
    cfg.t_end = 5.0;
    cfg.h_init = 10.0;
    EXPECT_THROW(integrate(example1_initial_state(), paper_params(), example1_problem(), cfg), ParameterError);
    cfg = {};
    SimState s = example1_initial_state();
    s.t = 2.0;
    EXPECT_THROW(integrate(s, paper_params(), example1_problem(), cfg), ParameterError);
    s = example1_initial_state();
    s.x[0] = std::nan("");
    EXPECT_ANY_THROW(integrate(s, paper_params(), example1_problem(), cfg));
}
