#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "rsmp/control.hpp"
#include "rsmp/errors.hpp"
#include "rsmp/problem.hpp"
#include "rsmp/registry.hpp"
#include "rsmp/validation.hpp"

namespace rsmp {
namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

TEST(ControlSet, BoxGridAndMembership) {
  const auto box = ControlSet::box(v1(-1.0), v1(1.0), 21);
  ASSERT_EQ(box.evaluation_grid().size(), 21u);
  EXPECT_DOUBLE_EQ(box.evaluation_grid().front()[0], -1.0);
  EXPECT_DOUBLE_EQ(box.evaluation_grid()[10][0], 0.0);
  EXPECT_TRUE(box.contains(v1(0.3)));
  EXPECT_FALSE(box.contains(v1(1.1)));
  EXPECT_DOUBLE_EQ(box.max_norm(), 1.0);

  Vec lo(2), hi(2);
  lo << 0.0, -1.0;
  hi << 1.0, 1.0;
  EXPECT_EQ(ControlSet::box(lo, hi, 3).evaluation_grid().size(), 9u);
  EXPECT_THROW(ControlSet::box(hi, lo, 3), InvalidArgument);
}

TEST(ControlSet, FiniteSetSampling) {
  const auto set = ControlSet::finite({v1(-1.0), v1(0.0), v1(1.0)});
  EXPECT_TRUE(set.contains(v1(0.0)));
  EXPECT_FALSE(set.contains(v1(0.5)));
  EXPECT_EQ(set.sample(v1(0.1))[0], -1.0);
  EXPECT_EQ(set.sample(v1(0.9))[0], 1.0);
  EXPECT_THROW(ControlSet::finite({}), InvalidArgument);
}

TEST(ControlProcess, ScheduleAndSplice) {
  const auto base = ControlProcess::constant(v1(0.5));
  const auto sched = ControlProcess::schedule({v1(0.0), v1(1.0), v1(-1.0)});
  EXPECT_EQ(sched.value(1, 0.0, Vec::Zero(1))[0], 1.0);
  EXPECT_NO_THROW(sched.check_steps(3));
  EXPECT_THROW(sched.check_steps(4), InvalidArgument);

  const auto spliced =
      ControlProcess::spliced(base, ControlProcess::constant(v1(-1.0)),
                              {false, true, false});
  EXPECT_EQ(spliced.value(0, 0.0, Vec::Zero(1))[0], 0.5);
  EXPECT_EQ(spliced.value(1, 0.0, Vec::Zero(1))[0], -1.0);
  EXPECT_FALSE(spliced.needs_state());

  const auto box = ControlSet::box(v1(-1.0), v1(1.0));
  EXPECT_THROW(ControlProcess::constant(v1(2.0)).check_in(box),
               InvalidArgument);
}

TEST(ControlProcess, FeedbackNeedsState) {
  const auto fb = ControlProcess::feedback(
      1, [](double, const Vec& x) { return Vec::Constant(1, x[0] > 0 ? 1 : -1); });
  EXPECT_TRUE(fb.needs_state());
  EXPECT_EQ(fb.value(0, 0.0, v1(2.0))[0], 1.0);
}

TEST(Registry, NamesAndErrors) {
  const auto names = registry_names();
  EXPECT_NE(std::find(names.begin(), names.end(), "example1"), names.end());
  EXPECT_NE(std::find(names.begin(), names.end(), "example2"), names.end());
  EXPECT_NE(std::find(names.begin(), names.end(), "affine"), names.end());
  EXPECT_THROW(build_registry_problem("nope", {}), InvalidArgument);
  EXPECT_THROW(build_registry_problem("example1", {{"alpha", 1.0}}),
               InvalidArgument);
  EXPECT_THROW(build_registry_problem("example2", {{"sign", 2}}),
               InvalidArgument);
}

TEST(Registry, Example1Coefficients) {
  const auto p = make_example1(1.0, 0.5, 0.3);
  EXPECT_EQ(p->n(), 2);
  EXPECT_EQ(p->d(), 1);
  EXPECT_EQ(p->m(), 1);
  EXPECT_EQ(p->control_set().evaluation_grid().size(), 21u);
  const Vec x = p->initial_state();
  EXPECT_DOUBLE_EQ(x.norm(), 1.0);

  // Ito drift of the rotation: u J x - a^2 x / 2.
  const Vec b = p->drift(0.0, x, v1(0.5));
  EXPECT_DOUBLE_EQ(b[0], -0.5);
  EXPECT_DOUBLE_EQ(b[1], 0.5);
  const Mat s = p->diffusion(0.0, x);
  EXPECT_DOUBLE_EQ(s(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(s(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(p->diffusion_x(0.0, x, 0).norm(), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(p->generator(0.0, x, 2.0, v1(1.0), v1(0.0)), 1.3);
  EXPECT_DOUBLE_EQ(p->terminal_cost(x), 0.5);
}

TEST(Registry, Example2Coefficients) {
  for (int s : {-1, 1}) {
    const auto p = make_example2(s);
    EXPECT_EQ(p->control_set().evaluation_grid().size(), 3u);
    EXPECT_DOUBLE_EQ(p->drift(0.0, v1(3.0), v1(-1.0))[0], -1.0);
    EXPECT_DOUBLE_EQ(p->diffusion(0.0, v1(3.0))(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(p->terminal_cost(v1(3.0)), 2.0 * s);
    EXPECT_DOUBLE_EQ(p->terminal_hessian(v1(3.0))(0, 0), s);
  }
}

TEST(Registry, AffineRoundTrip) {
  const AffineSpec spec = random_affine_spec(3, 2, 2, 1);
  const auto json = affine_spec_to_json(spec);
  const AffineSpec back = parse_affine_spec(json);
  EXPECT_TRUE(back.A.isApprox(spec.A));
  EXPECT_TRUE(back.H.isApprox(spec.H));
  EXPECT_EQ(back.C.size(), spec.C.size());
  const auto p = build_registry_problem("affine", json);
  EXPECT_EQ(p->n(), 2);
  EXPECT_EQ(p->d(), 2);
  EXPECT_EQ(p->m(), 1);
}

TEST(Registry, AffineScalarShorthand) {
  const auto spec = parse_affine_spec(
      {{"n", 2}, {"d", 1}, {"m", 1}, {"A", 0.5}, {"H", 1.0}});
  EXPECT_TRUE(spec.A.isApprox(0.5 * Eigen::MatrixXd::Identity(2, 2)));
}

TEST(Derivatives, AnalyticAgreesWithFiniteDifferences) {
  const std::vector<ProblemPtr> problems = {
      make_example1(1.0, 0.5, 0.3), make_example2(1, 0.3, 0.2),
      make_affine_problem(random_affine_spec(11, 3, 2, 2))};
  for (const auto& p : problems) {
    ASSERT_TRUE(p->has_analytic_derivatives());
    const Vec x = p->initial_state() + Vec::Constant(p->n(), 0.2);
    const Vec z = Vec::Constant(p->d(), -0.4);
    const Vec u = p->control_set().evaluation_grid().back();
    EXPECT_LE(derivative_discrepancy(*p, 0.3, x, 0.7, z, u, 1e-4), 1e-5)
        << p->name();
  }
}

TEST(Derivatives, FunctionProblemUsesFiniteDifferences) {
  FunctionProblem p(
      "cubic", Dimensions{1, 1, 1}, 1.0, v1(0.0),
      ControlSet::box(v1(-1.0), v1(1.0)), 10.0,
      {[](double, const Vec& x, const Vec& u) { return Vec(x.array().cube() + u.array()); },
       [](double, const Vec&) { return Mat::Constant(1, 1, 0.1); },
       [](double, const Vec& x, double y, const Vec&, const Vec&) {
         return x[0] * y;
       },
       [](const Vec& x) { return std::sin(x[0]); }});
  EXPECT_FALSE(p.has_analytic_derivatives());
  EXPECT_NEAR(p.drift_x(0.0, v1(2.0), v1(0.0))(0, 0), 12.0, 1e-6);
  EXPECT_NEAR(p.terminal_gradient(v1(0.0))[0], 1.0, 1e-8);
  const auto g = p.generator_gradient(0.0, v1(2.0), 3.0, v1(0.0), v1(0.0));
  EXPECT_NEAR(g.fx[0], 3.0, 1e-6);
  EXPECT_NEAR(g.fy, 2.0, 1e-6);
}

TEST(Validation, RegistryProblemsPass) {
  ValidationOptions opt;
  opt.samples = 128;
  for (const auto& p :
       {make_example1(1.0, 0.5, 0.3), make_example2(-1), make_example2(1)}) {
    const auto report = validate_problem(*p, opt);
    EXPECT_TRUE(report.pass) << p->name();
    EXPECT_EQ(report.samples, 128u);
    EXPECT_TRUE(report.check("sigma_x").pass);
    EXPECT_TRUE(report.check("analytic_vs_fd").pass);
  }
}

TEST(Validation, Example1Constants) {
  ValidationOptions opt;
  opt.samples = 64;
  const auto report = validate_problem(*make_example1(1.0, 0.5, 0.3), opt);
  // sigma_x is the rotation generator, whose spectral norm is a.
  EXPECT_NEAR(report.check("sigma_x").worst, 1.0, 1e-12);
  EXPECT_NEAR(report.check("f_y").worst, 0.5, 1e-12);
  EXPECT_NEAR(report.check("f_z").worst, 0.3, 1e-12);
}

TEST(Validation, TightBoundFails) {
  const auto p = make_example1(1.0, 0.5, 0.3, 1.0, 21, 0.1);
  ValidationOptions opt;
  opt.samples = 32;
  const auto report = validate_problem(*p, opt);
  EXPECT_FALSE(report.pass);
  EXPECT_FALSE(report.check("sigma_x").pass);
  EXPECT_THROW(report.check("missing"), InvalidArgument);
}

TEST(Validation, DeterministicInSeed) {
  const auto p = make_affine_problem(random_affine_spec(5, 2, 1, 1));
  ValidationOptions opt;
  opt.samples = 50;
  const auto a = validate_problem(*p, opt);
  const auto b = validate_problem(*p, opt, Executor(3));
  ASSERT_EQ(a.checks.size(), b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    EXPECT_EQ(a.checks[i].worst, b.checks[i].worst);
    EXPECT_EQ(a.checks[i].where, b.checks[i].where);
  }
}

TEST(Validation, NonFiniteCoefficientThrows) {
  FunctionProblem p(
      "bad", Dimensions{1, 1, 1}, 1.0, v1(0.0),
      ControlSet::box(v1(-1.0), v1(1.0)), 1.0,
      {[](double, const Vec& x, const Vec&) { return Vec(x.array().log()); },
       [](double, const Vec&) { return Mat::Constant(1, 1, 1.0); },
       [](double, const Vec&, double, const Vec&, const Vec&) { return 0.0; },
       [](const Vec&) { return 0.0; }});
  EXPECT_THROW(validate_problem(p, {}), InvalidProblem);
}

TEST(Admissibility, EighthMomentNorm) {
  PathArray u(4, 3, 1, 0.5);
  EXPECT_DOUBLE_EQ(admissibility_norm(u), 0.5);
  u(0, 2, 0) = 2.0;
  EXPECT_NEAR(admissibility_norm(u),
              std::pow((std::pow(2.0, 8) + 3 * std::pow(0.5, 8)) / 4, 0.125),
              1e-12);
  EXPECT_THROW(admissibility_norm(PathArray()), InvalidArgument);
}

}  // namespace
}  // namespace rsmp
