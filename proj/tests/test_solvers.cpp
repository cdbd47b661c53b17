#include "diagreg/data.hpp"
#include "diagreg/oracle.hpp"
#include "diagreg/solvers.hpp"

#include <gtest/gtest.h>

using namespace diagreg;

namespace {

Dataset single(double a, double b) {
  Matrix x(1, 2);
  x << a, b;
  return Dataset(x, Vector::Ones(1));
}

SolverConfig with_gamma(double gamma, double lambda0 = 1.0) {
  SolverConfig c;
  c.gamma = gamma;
  c.schedule = {ScheduleFamily::constant, lambda0};
  return c;
}

Dataset scaled_anchors(double s) {
  const Dataset a = gen_support_anchor(4, 0);
  return Dataset(a.points() * s, a.labels());
}

}  // namespace

TEST(Schedule, Values) {
  EXPECT_EQ(schedule_value({ScheduleFamily::linear, 4.0}, 8), 0.5);
  EXPECT_EQ(schedule_value({ScheduleFamily::exponential, 8.0}, 3), 1.0);
  EXPECT_EQ(schedule_value({ScheduleFamily::sqrt, 8.0}, 16), 2.0);
  EXPECT_EQ(schedule_value({ScheduleFamily::quadratic, 8.0}, 2), 2.0);
  EXPECT_EQ(schedule_value({ScheduleFamily::log, 8.0}, 2), 8.0);
  EXPECT_DOUBLE_EQ(schedule_value({ScheduleFamily::log, 8.0}, 3), 8.0 / std::log(3.0));
}

TEST(Schedule, StartsAtLambda0AndNeverIncreases) {
  for (auto f : {ScheduleFamily::constant, ScheduleFamily::log, ScheduleFamily::sqrt,
                 ScheduleFamily::linear, ScheduleFamily::quadratic,
                 ScheduleFamily::exponential}) {
    const Schedule s{f, 3.5};
    EXPECT_EQ(schedule_value(s, 0), 3.5) << to_string(f);
    if (f != ScheduleFamily::quadratic && f != ScheduleFamily::exponential &&
        f != ScheduleFamily::constant)
      EXPECT_EQ(schedule_value(s, 1), 3.5) << to_string(f);
    double prev = schedule_value(s, 0);
    for (std::size_t t = 1; t < 3000; ++t) {
      const double v = schedule_value(s, t);
      EXPECT_LE(v, prev);
      EXPECT_GT(v, 0.0);
      prev = v;
    }
  }
}

TEST(Schedule, ParseRoundTrip) {
  for (auto f : {ScheduleFamily::constant, ScheduleFamily::log, ScheduleFamily::sqrt,
                 ScheduleFamily::linear, ScheduleFamily::quadratic,
                 ScheduleFamily::exponential})
    EXPECT_EQ(parse_schedule_family(to_string(f)), f);
  EXPECT_FALSE(parse_schedule_family("cubic"));
}

TEST(Gamma, AutoAndValidation) {
  const DualProblem p(gen_support_anchor(4, 0), Kernel::linear());
  SolverConfig c;
  EXPECT_NEAR(resolve_gamma(c, p.gram), 0.999 / 8.0, 1e-12);
  c.gamma = 0.2;
  EXPECT_THROW(resolve_gamma(c, p.gram), invalid_argument);
  const DualProblem zero(single(0, 0), Kernel::linear());
  EXPECT_THROW(resolve_gamma(SolverConfig{}, zero.gram), invalid_argument);
}

TEST(StepAlg1, FromZero) {
  const DualProblem p(gen_support_anchor(4, 0), Kernel::linear());
  const SolverConfig c = with_gamma(0.5, 2.0);
  const SolverState s0 = initial_state(p, c);
  const SolverState s1 = step_alg1(s0, p, c);
  EXPECT_EQ(s1.u, Vector::Constant(4, -0.5));
  EXPECT_EQ(s1.t, 1u);
  EXPECT_EQ(s1.w, dual_to_primal(s1.u, *p.rows));
}

TEST(StepAlg1, OnePointFixedPoint) {
  const DualProblem p(single(1, 0), Kernel::linear());
  SolverConfig c = with_gamma(1.0, 1.0);
  c.u0 = Vector::Constant(1, -1.0);
  const SolverState s1 = step_alg1(initial_state(p, c), p, c);
  EXPECT_EQ(s1.u(0), -1.0);
  EXPECT_EQ(s1.w(0), 1.0);
  EXPECT_EQ(s1.w(1), 0.0);
}

TEST(StepAlg1, RequiresResolvedGamma) {
  const DualProblem p(single(1, 0), Kernel::linear());
  const SolverConfig c;
  EXPECT_THROW(step_alg1(initial_state(p, c), p, c), invalid_argument);
}

TEST(InitialState, RejectsStartOutsideBox) {
  const DualProblem p(single(1, 0), Kernel::linear());
  SolverConfig c = with_gamma(0.5, 2.0);
  c.u0 = Vector::Constant(1, -0.6);
  EXPECT_THROW(initial_state(p, c), invalid_argument);
  c.u0 = Vector::Constant(1, 0.1);
  EXPECT_THROW(initial_state(p, c), invalid_argument);
}

TEST(StepAlg2, NoInertiaEqualsAlg1) {
  const DualProblem p(gen_support_anchor(12, 3), Kernel::linear());
  SolverConfig c = with_gamma(0.999 / p.gram.op_norm(), 2.0);
  c.alpha = 5;
  SolverState s = initial_state(p, c);
  s.t = 4;
  s.u = -0.3 * Vector::Ones(12);
  s.u_prev = s.u;
  EXPECT_EQ(step_alg2(s, p, c).u, step_alg1(s, p, c).u);
}

TEST(StepAlg2, ExtrapolationWeight) {
  // With a zero Gram matrix the step is z - gamma, so z is observable:
  // z = u + 1/4 (u - u_prev) at t = 1, alpha = 3.
  const DualProblem p(single(0, 0), Kernel::linear());
  SolverConfig c = with_gamma(0.5, 0.01);
  c.alpha = 3;
  SolverState s = initial_state(p, c);
  s.t = 1;
  s.u = Vector::Constant(1, -1.0);
  s.u_prev = Vector::Zero(1);
  EXPECT_EQ(step_alg2(s, p, c).u(0), -1.25 - 0.5);
}

TEST(StepAlg2, Preconditions) {
  const DualProblem p(single(1, 0), Kernel::linear());
  SolverConfig c = with_gamma(0.5);
  SolverState s = initial_state(p, c);
  EXPECT_THROW(step_alg2(s, p, c), invalid_argument);
  s.t = 1;
  c.alpha = 2.5;
  EXPECT_THROW(step_alg2(s, p, c), invalid_argument);
}

TEST(StepAlg2, HugeAlphaTracksAlg1EarlyOn) {
  // With u_0 = u_1 the first inertial update has no momentum at all, and for
  // alpha = 1e9 the next ones carry a weight of about 1e-9.
  const DualProblem p(gen_support_anchor(20, 1), Kernel::linear());
  SolverConfig c;
  c.schedule = {ScheduleFamily::constant, 4.0};
  c.alpha = 1e9;
  c.iterations = 5;
  const Trace a1 = run(p, c, Algorithm::alg1);
  const Trace a2 = run(p, c, Algorithm::alg2);
  EXPECT_EQ(*a2.rows[2].dual_obj, *a1.rows[1].dual_obj);
  for (std::size_t t = 2; t <= 5; ++t)
    EXPECT_NEAR(*a2.rows[t].dual_obj, *a1.rows[t - 1].dual_obj, 1e-8);
}

TEST(Run, ZeroIterationsSingleRow) {
  const DualProblem p(gen_support_anchor(8, 0), Kernel::linear());
  SolverConfig c;
  c.iterations = 0;
  const Trace tr = run(p, c, Algorithm::alg1);
  ASSERT_EQ(tr.rows.size(), 1u);
  EXPECT_EQ(tr.rows[0].t, 0u);
  EXPECT_EQ(*tr.rows[0].dual_obj, 0.0);
}

TEST(Run, RowCountAndDeterminism) {
  const DualProblem p(gen_support_anchor(40, 2), Kernel::linear());
  SolverConfig c;
  c.iterations = 50;
  c.schedule = {ScheduleFamily::sqrt, 3.0};
  for (auto a : {Algorithm::alg1, Algorithm::alg2}) {
    const Trace x = run(p, c, a), y = run(p, c, a);
    ASSERT_EQ(x.rows.size(), 51u);
    for (std::size_t t = 0; t <= 50; ++t) {
      EXPECT_EQ(x.rows[t].t, t);
      EXPECT_EQ(*x.rows[t].dual_obj, *y.rows[t].dual_obj);
      EXPECT_EQ(x.rows[t].margin, y.rows[t].margin);
    }
    EXPECT_EQ(x.final_state.u, y.final_state.u);
  }
}

TEST(Run, InertialRowOneRepeatsStart) {
  const DualProblem p(gen_support_anchor(10, 2), Kernel::linear());
  SolverConfig c;
  c.iterations = 3;
  c.schedule = {ScheduleFamily::linear, 4.0};
  const Trace tr = run(p, c, Algorithm::alg2);
  EXPECT_EQ(*tr.rows[0].dual_obj, 0.0);
  EXPECT_EQ(*tr.rows[1].dual_obj, 0.0);
  EXPECT_EQ(*tr.rows[1].lambda_t, 4.0);
  EXPECT_LT(*tr.rows[2].dual_obj, 0.0);
}

TEST(Run, IteratesStayInBox) {
  const DualProblem p(gen_support_anchor(30, 5), Kernel::linear());
  for (auto a : {Algorithm::alg1, Algorithm::alg2}) {
    SolverConfig c;
    c.schedule = {ScheduleFamily::sqrt, 2.0};
    c.alpha = 10;
    c.gamma = resolve_gamma(c, p.gram);
    SolverState s = initial_state(p, c);
    s = step_alg1(s, p, c);
    for (int k = 0; k < 300; ++k) {
      s = a == Algorithm::alg1 ? step_alg1(s, p, c) : step_alg2(s, p, c);
      const double lam = schedule_value(c.schedule, s.t - 1);
      EXPECT_TRUE(in_box(s.u, lam, 0.0));
      EXPECT_EQ(s.w, dual_to_primal(s.u, *p.rows));
    }
  }
}

TEST(Run, Alg1DualObjectiveNonIncreasing) {
  const DualProblem p(gen_support_anchor(80, 0), Kernel::linear());
  SolverConfig c;
  c.iterations = 1000;
  c.schedule = {ScheduleFamily::linear, 4.0};
  const Trace tr = run(p, c, Algorithm::alg1);
  for (std::size_t t = 1; t < tr.rows.size(); ++t)
    EXPECT_LE(*tr.rows[t].dual_obj, *tr.rows[t - 1].dual_obj + 1e-10) << "t=" << t;
}

TEST(Run, Alg1ConvergesToAnchorSolution) {
  const DualProblem p(gen_support_anchor(80, 0), Kernel::linear());
  SolverConfig c;
  c.iterations = 3000;
  c.schedule = {ScheduleFamily::linear, 4.0};
  const Trace tr = run(p, c, Algorithm::alg1);
  const Vector w_star = Eigen::Vector2d(0.5, 0.5);
  EXPECT_LE((tr.final_state.w - w_star).norm(), 1e-5);
  for (const auto& row : tr.rows) EXPECT_GE(row.margin, -1e-12);
}

TEST(Run, InertialBeatsPlainOnAnchors) {
  const DualProblem p(gen_support_anchor(80, 0), Kernel::linear());
  const OracleSolution sol = solve_max_margin(p.gram, p.rows);
  SolverConfig c;
  c.iterations = 1000;
  c.alpha = 10;
  c.schedule = {ScheduleFamily::linear, 4.0};
  const Trace a1 = run(p, c, Algorithm::alg1, {&sol});
  const Trace a2 = run(p, c, Algorithm::alg2, {&sol});
  EXPECT_LE(*a2.rows.back().margin_gap, 2.0 * *a1.rows.back().margin_gap);
  EXPECT_LE(*a2.rows.back().norm_error, *a1.rows.back().norm_error);
}

TEST(Run, KernelTraceWithoutPrimalVector) {
  const auto data = gen_gaussian_blobs(40, 0.4, 1);
  const DualProblem p(data, Kernel::gaussian(0.15));
  EXPECT_FALSE(p.rows);
  SolverConfig c;
  c.iterations = 20;
  const Trace tr = run(p, c, Algorithm::alg1, {nullptr, &data});
  EXPECT_EQ(tr.final_state.w.size(), 0);
  ASSERT_TRUE(tr.rows.back().test_error);
  EXPECT_LE(*tr.rows.back().test_error, 0.2);
}

TEST(Tikhonov, HugeLambdaCollapsesToZero) {
  const DualProblem p(gen_support_anchor(20, 0), Kernel::linear());
  const auto r = solve_tikhonov_dual(p.gram, *p.rows, 1e12,
                                     0.999 / p.gram.op_norm(), 1e-12, 100000);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.u.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(r.w.norm(), 1e-10);
}

TEST(Tikhonov, StrongDuality) {
  const DualProblem p(gen_support_anchor(20, 3), Kernel::linear());
  const double gamma = 0.999 / p.gram.op_norm();
  for (double lambda : {4.0, 1.0, 0.3}) {
    const auto r = solve_tikhonov_dual(p.gram, *p.rows, lambda, gamma, 1e-12, 2'000'000);
    ASSERT_TRUE(r.converged);
    const double primal = tikhonov_primal_objective(r.w, *p.rows, lambda);
    EXPECT_NEAR(primal, -dual_objective_t(r.u, lambda, p.gram), 1e-6) << lambda;
    EXPECT_NEAR(primal, tikhonov_primal_objective(r.u, p.gram, lambda), 1e-12);
  }
}

TEST(Tikhonov, PathApproachesMinNormSolution) {
  // Shrinking the anchors by s makes u* = -1/(8 s^2) large enough for the
  // box to bind at every lambda above 8 s^2.
  const double s = 0.02;
  const DualProblem p(scaled_anchors(s), Kernel::linear());
  const Vector w_star = Eigen::Vector2d(0.5 / s, 0.5 / s);
  const double gamma = 0.999 / p.gram.op_norm();
  double prev = infinity;
  for (double lambda : {1.0, 0.1, 0.01, 0.001}) {
    const auto r = solve_tikhonov_dual(p.gram, *p.rows, lambda, gamma, 1e-12, 1'000'000);
    ASSERT_TRUE(r.converged);
    const double err = (r.w - w_star).norm();
    EXPECT_LT(err, prev) << lambda;
    prev = err;
  }
  EXPECT_LE(prev, 1e-6);
}
