#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "rsmp/brownian.hpp"
#include "rsmp/errors.hpp"
#include "rsmp/oracles.hpp"
#include "rsmp/problem.hpp"
#include "rsmp/registry.hpp"
#include "rsmp/sde.hpp"

namespace rsmp {
namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

ControlProcess constant(double u) { return ControlProcess::constant(v1(u)); }

TEST(Example1Oracle, ClosedFormValues) {
  const Example1Oracle o{1.0, 0.5, 0.3, 1.0};
  const auto pt = o.eval(0.0, 0.0, 0.5);
  EXPECT_DOUBLE_EQ(pt.x[0], 1.0);
  EXPECT_DOUBLE_EQ(pt.x[1], 0.0);
  EXPECT_NEAR(pt.p[0], std::exp(0.5), 1e-15);
  EXPECT_NEAR(pt.q[1], std::exp(0.5), 1e-15);
  EXPECT_NEAR(pt.y, 0.5 * std::exp(0.5), 1e-15);
  EXPECT_TRUE(pt.P.isApprox(std::exp(0.5) * Mat::Identity(2, 2)));

  // Any point of the trajectory lies on the unit circle.
  const auto later = o.eval(0.7, -1.3, 0.5);
  EXPECT_NEAR(later.x.norm(), 1.0, 1e-15);
  EXPECT_NEAR(later.q.dot(later.x), 0.0, 1e-15);
  EXPECT_NEAR(o.eval(1.0, 0.4, 0.5).y, 0.5, 1e-15);
}

TEST(Example1Oracle, SecondOrderTermsCancel) {
  const Example1Oracle o{1.0, 0.5, 0.3, 1.0};
  for (double t : {0.0, 0.3, 0.9}) {
    for (double v : {-1.0, 0.0, 0.8}) {
      EXPECT_NEAR(o.delta_g_db(t, v, 0.5) + o.db_P_db(t, v, 0.5), 0.0, 1e-14);
    }
  }
}

TEST(Example2Oracle, PValues) {
  EXPECT_NEAR(example2_P(1, 0.0, 0.0, 0.0), 0.5 * std::numbers::e, 1e-14);
  EXPECT_NEAR(example2_P(-1, 0.0, 0.0, 0.0), -0.5 * std::numbers::e, 1e-14);
  EXPECT_DOUBLE_EQ(example2_P(1, 0.3, 0.2, 1.0), 0.5);
  EXPECT_NEAR(example2_P(1, 0.3, 0.2, 0.5), 0.5 * std::exp(0.85), 1e-14);
  EXPECT_DOUBLE_EQ(example2_P(-1, 0.0, 0.0, 1.0, 1.0, 1.0), -1.0);
}

TEST(OracleDiff, SelfDiffIsZeroAndShapesChecked) {
  const auto noise = sample_brownian(TimeGrid(1.0, 16), 32, 1, 3);
  const auto exact = example1_paths(Example1Oracle{1.0, 0.5, 0.3}, noise, 0.5);
  const FieldDiff d = oracle_diff("x", exact.x, exact.x);
  EXPECT_EQ(d.rms, 0.0);
  EXPECT_EQ(d.max_abs, 0.0);
  EXPECT_EQ(d.mean_sup_squared, 0.0);
  EXPECT_THROW(oracle_diff("x", exact.x, exact.q), InvalidArgument);

  PathArray shifted = exact.x;
  for (double& v : shifted.data()) v += 0.1;
  const FieldDiff s = oracle_diff("x", shifted, exact.x);
  EXPECT_NEAR(s.max_abs, 0.1, 1e-12);
  EXPECT_NEAR(s.rms, std::sqrt(0.02), 1e-12);
  EXPECT_NEAR(s.mean_sup_squared, 0.02, 1e-12);
}

TEST(OracleDiff, ExactPathsStayOnCircle) {
  const auto noise = sample_brownian(TimeGrid(1.0, 8), 10, 1, 4);
  const auto exact = example1_paths(Example1Oracle{}, noise, 0.2);
  for (std::size_t path = 0; path < 10; ++path) {
    for (std::size_t k = 0; k <= 8; ++k) {
      EXPECT_NEAR(exact.x.at(path, k).norm(), 1.0, 1e-14);
    }
  }
}

TEST(Euler, Example1ConvergesToClosedForm) {
  const auto problem = make_example1(1.0, 0.5, 0.3);
  const auto fine = sample_brownian(TimeGrid(1.0, 1024), 400, 1, 8);
  double prev = 0.0;
  for (std::size_t factor : {16u, 4u, 1u}) {
    const auto noise = coarsen(fine, factor);
    const auto paths = euler_forward(*problem, constant(0.5), noise);
    const auto exact = example1_paths(Example1Oracle{1.0, 0.5, 0.3}, noise, 0.5);
    const double err = oracle_diff("x", paths.x, exact.x).mean_sup_squared;
    if (prev > 0.0) {
      EXPECT_LT(err, prev / 2.0);
    }
    prev = err;
  }
  EXPECT_LT(prev, 2.5e-3);
}

TEST(Euler, RecordsAppliedControls) {
  const auto problem = make_example2(1);
  const auto noise = sample_brownian(TimeGrid(1.0, 4), 3, 1, 1);
  const auto sched =
      ControlProcess::schedule({v1(1.0), v1(0.0), v1(-1.0), v1(1.0)});
  const auto paths = euler_forward(*problem, sched, noise);
  EXPECT_EQ(paths.u(2, 2, 0), -1.0);
  // sigma vanishes at x = 1, so the first step is deterministic.
  EXPECT_DOUBLE_EQ(paths.x(0, 1, 0), 1.25);
  EXPECT_THROW(euler_forward(*problem, constant(0.5), noise), InvalidArgument);
}

TEST(Euler, BlowupIsReported) {
  FunctionProblem p(
      "explode", Dimensions{1, 1, 1}, 1.0, v1(1.0),
      ControlSet::box(v1(-1.0), v1(1.0)), 1.0,
      {[](double, const Vec& x, const Vec&) { return Vec(x.array().square() * 1e200); },
       [](double, const Vec&) { return Mat::Zero(1, 1); },
       [](double, const Vec&, double, const Vec&, const Vec&) { return 0.0; },
       [](const Vec&) { return 0.0; }});
  const auto noise = sample_brownian(TimeGrid(1.0, 8), 2, 1, 1);
  try {
    euler_forward(p, constant(0.0), noise);
    FAIL() << "expected a blowup";
  } catch (const IntegrationBlowup& e) {
    EXPECT_EQ(e.path(), 0u);
  }
}

TEST(Variations, ZeroSpikeGivesZeroVariations) {
  const auto problem = make_affine_problem(random_affine_spec(2, 2, 1, 1));
  const auto noise = sample_brownian(TimeGrid(1.0, 32), 20, 1, 5);
  const auto ubar = ControlProcess::constant(Vec::Zero(1));
  const auto base = euler_forward(*problem, ubar, noise);
  const auto v = integrate_variations(*problem, base, base.u, noise);
  for (double x : v.x1.data()) EXPECT_EQ(x, 0.0);
  for (double x : v.x2.data()) EXPECT_EQ(x, 0.0);
}

TEST(Variations, LinearProblemFirstVariationIsExact) {
  // For drift linear in (x, u) with additive noise, x_eps - xbar = x1.
  AffineSpec spec = AffineSpec::zeros(1, 1, 1);
  spec.A(0, 0) = -0.5;
  spec.B(0, 0) = 1.0;
  spec.D(0, 0) = 0.3;
  spec.x0 = Eigen::VectorXd::Constant(1, 0.2);
  const auto problem = make_affine_problem(spec);
  const TimeGrid grid(1.0, 64);
  const auto noise = sample_brownian(grid, 16, 1, 6);
  const auto base = euler_forward(*problem, constant(0.0), noise);
  const auto spiked = euler_forward(*problem, constant(1.0), noise);
  const auto x1 = integrate_variation_first(*problem, base, spiked.u, noise);
  for (std::size_t path = 0; path < 16; ++path) {
    for (std::size_t k = 0; k <= 64; ++k) {
      EXPECT_NEAR(spiked.x(path, k) - base.x(path, k), x1(path, k), 1e-13);
    }
  }
}

TEST(Gamma, PositiveAndOneAtStart) {
  const auto problem = make_example1(1.0, 0.5, 0.3);
  const TimeGrid grid(1.0, 32);
  const auto noise = sample_brownian(grid, 50, 1, 7);
  const auto base = euler_forward(*problem, constant(0.5), noise);
  const PathArray y(50, 33, 1, 0.0);
  const PathArray z(50, 32, 1, 0.0);
  const auto gamma = integrate_gamma(*problem, base, y, z, noise);
  for (std::size_t path = 0; path < 50; ++path) {
    EXPECT_EQ(gamma(path, 0), 1.0);
    for (std::size_t k = 0; k <= 32; ++k) EXPECT_GT(gamma(path, k), 0.0);
  }
  // f_y = beta, f_z = gamma: E gamma_T = e^beta.
  const auto wide = sample_brownian(grid, 20000, 1, 8);
  const auto wide_base = euler_forward(*problem, constant(0.5), wide);
  const auto g = integrate_gamma(*problem, wide_base, PathArray(20000, 33, 1),
                                 PathArray(20000, 32, 1), wide);
  double sum = 0.0;
  for (std::size_t path = 0; path < 20000; ++path) sum += g(path, 32);
  EXPECT_NEAR(sum / 20000.0, std::exp(0.5), 0.01);
}

TEST(PathDump, OneRowPerPathAndNode) {
  const auto problem = make_example2(1);
  const auto noise = sample_brownian(TimeGrid(1.0, 4), 5, 1, 1);
  const auto paths = euler_forward(*problem, constant(0.0), noise);
  std::ostringstream out;
  write_path_dump(out, noise, paths, 2);
  std::size_t lines = 0;
  for (char c : out.str()) lines += c == '\n';
  EXPECT_GE(lines, 10u);
  EXPECT_LE(lines, 11u);
}

TEST(Slice, KeepsRows) {
  const auto noise = sample_brownian(TimeGrid(1.0, 4), 10, 2, 1);
  const auto part = slice(noise, 3, 7);
  ASSERT_EQ(part.paths, 4u);
  EXPECT_EQ(part.increments(0, 2, 1), noise.increments(3, 2, 1));
  EXPECT_THROW(slice(noise, 5, 5), InvalidArgument);
  EXPECT_THROW(slice(noise, 0, 11), InvalidArgument);
}

}  // namespace
}  // namespace rsmp
