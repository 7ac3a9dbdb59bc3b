#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "rsmp/brownian.hpp"
#include "rsmp/bsde.hpp"
#include "rsmp/maximum_principle.hpp"
#include "rsmp/oracles.hpp"
#include "rsmp/registry.hpp"
#include "rsmp/regression.hpp"
#include "rsmp/sde.hpp"

namespace rsmp {
namespace {

ControlProcess constant(double u) {
  return ControlProcess::constant(Vec::Constant(1, u));
}

TEST(Monomials, CountAndOrder) {
  const auto e = monomial_exponents(2, 2);
  ASSERT_EQ(e.size(), 6u);
  EXPECT_EQ(e[0], (std::vector<int>{0, 0}));
  EXPECT_EQ(monomial_exponents(3, 3).size(), 20u);
  EXPECT_EQ(monomial_exponents(1, 0).size(), 1u);
}

TEST(Projector, ReproducesPolynomialsInTheBasis) {
  const int m = 200;
  Eigen::MatrixXd x(m, 1), y(m, 1);
  for (int i = 0; i < m; ++i) {
    x(i, 0) = -2.0 + 4.0 * i / (m - 1);
    y(i, 0) = 1.0 + 2.0 * x(i, 0) - 3.0 * x(i, 0) * x(i, 0);
  }
  RegressionOptions opt;
  opt.ridge = 0.0;
  const LeastSquaresProjector proj(x, opt);
  EXPECT_EQ(proj.basis_size(), 3);
  EXPECT_LT((proj.fit(y) - y).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Projector, ConstantFeatureFallsBackToMean) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(10, 2, 3.0);
  Eigen::MatrixXd y(10, 1);
  for (int i = 0; i < 10; ++i) y(i, 0) = i;
  const LeastSquaresProjector proj(x, {});
  EXPECT_EQ(proj.active_features(), 0);
  EXPECT_EQ(proj.basis_size(), 1);
  EXPECT_NEAR(proj.fit(y)(7, 0), 4.5, 1e-12);
}

TEST(Projector, WorkerCountDoesNotChangeFit) {
  const auto noise = sample_brownian(TimeGrid(1.0, 2), 3000, 2, 1);
  Eigen::MatrixXd x(3000, 2), y(3000, 1);
  for (int i = 0; i < 3000; ++i) {
    x(i, 0) = noise.increments(i, 0, 0);
    x(i, 1) = noise.increments(i, 0, 1);
    y(i, 0) = std::sin(x(i, 0)) + x(i, 1);
  }
  const LeastSquaresProjector a(x, {}, Executor(1));
  const LeastSquaresProjector b(x, {}, Executor(4));
  EXPECT_TRUE(a.fit(y) == b.fit(y));
}

TEST(CostBsde, BrownianTerminalIsAMartingale) {
  // x = x0 + W, f = 0, h = 2 x: y = 2 x and z = 2, up to regression noise.
  AffineSpec spec = AffineSpec::zeros(1, 1, 1);
  spec.D(0, 0) = 1.0;
  spec.g = Eigen::VectorXd::Constant(1, 2.0);
  spec.x0 = Eigen::VectorXd::Constant(1, 0.3);
  const auto problem = make_affine_problem(spec);
  const auto noise = sample_brownian(TimeGrid(1.0, 32), 2000, 1, 2);
  const auto base = euler_forward(*problem, constant(0.0), noise);
  const auto cost = solve_cost_bsde(*problem, base, noise, {});
  EXPECT_NEAR(cost.y0.value, 0.6, 3.0 * cost.y0.se + 1e-12);
  double z_mean = 0.0;
  double y_ms = 0.0;
  for (std::size_t path = 0; path < 2000; ++path) {
    EXPECT_EQ(cost.y(path, 32), 2.0 * base.x(path, 32));
    const double e = cost.y(path, 10) - 2.0 * base.x(path, 10);
    y_ms += e * e / 2000.0;
    z_mean += cost.z(path, 10) / 2000.0;
  }
  EXPECT_LT(std::sqrt(y_ms), 0.1);
  EXPECT_NEAR(z_mean, 2.0, 0.05);
}

TEST(CostBsde, Example1ValueWithoutDiscounting) {
  const auto problem = make_example1(1.0, 0.0, 0.0);
  const auto noise = sample_brownian(TimeGrid(1.0, 128), 2048, 1, 3);
  const auto base = euler_forward(*problem, constant(0.5), noise);
  const auto cost = solve_cost_bsde(*problem, base, noise, {});
  EXPECT_NEAR(cost.y0.value, 0.5, 0.01);
}

TEST(CostBsde, Example1ValueMatchesClosedForm) {
  const auto problem = make_example1(1.0, 0.5, 0.3);
  const auto noise = sample_brownian(TimeGrid(1.0, 128), 2048, 1, 4);
  const auto base = euler_forward(*problem, constant(0.5), noise);
  const auto cost = solve_cost_bsde(*problem, base, noise, {});
  EXPECT_NEAR(cost.y0.value, 0.5 * std::exp(0.5), 0.02);
}

TEST(CostBsde, GivenTerminalShapeChecked) {
  const auto problem = make_example2(1);
  const auto noise = sample_brownian(TimeGrid(1.0, 8), 20, 1, 5);
  const auto base = euler_forward(*problem, constant(0.0), noise);
  EXPECT_THROW(solve_cost_bsde_terminal(*problem, base,
                                        Eigen::MatrixXd::Zero(19, 1), noise,
                                        {}),
               std::exception);
  const auto cost = solve_cost_bsde_terminal(
      *problem, base, Eigen::MatrixXd::Constant(20, 1, 1.5), noise, {});
  EXPECT_NEAR(cost.y0.value, 1.5, 1e-12);
}

TEST(Adjoints, TerminalValuesAreExact) {
  const std::vector<ProblemPtr> problems = {
      make_example1(1.0, 0.5, 0.3), make_example2(-1, 0.2, 0.1),
      make_affine_problem(random_affine_spec(7, 2, 2, 1))};
  for (const auto& problem : problems) {
    const auto noise = sample_brownian(TimeGrid(1.0, 16), 100, problem->d(), 6);
    const Vec u0 = problem->control_set().evaluation_grid().back();
    const auto ref = solve_reference(*problem, ControlProcess::constant(u0),
                                     noise, {}, Executor(), true, false);
    const int n = problem->n();
    for (std::size_t path = 0; path < 100; ++path) {
      const Vec x = ref.base.x.at(path, 16);
      EXPECT_EQ(ref.cost.y(path, 16), problem->terminal_cost(x));
      const Vec hx = problem->terminal_gradient(x);
      const Mat hxx = problem->terminal_hessian(x);
      for (int i = 0; i < n; ++i) {
        EXPECT_EQ(ref.adj1.p(path, 16, i), hx[i]);
        for (int j = 0; j < n; ++j) {
          EXPECT_EQ(ref.adj2->P(path, 16, j * n + i), hxx(i, j));
        }
      }
      for (std::size_t k = 0; k <= 16; ++k) {
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            EXPECT_EQ(ref.adj2->P(path, k, j * n + i),
                      ref.adj2->P(path, k, i * n + j));
          }
        }
      }
    }
  }
}

TEST(Adjoints, Example1MatchesClosedForm) {
  const auto problem = make_example1(1.0, 0.5, 0.3);
  const auto noise = sample_brownian(TimeGrid(1.0, 128), 2048, 1, 9);
  const auto ref = solve_reference(*problem, constant(0.5), noise, {},
                                   Executor(), true, false);
  const auto exact = example1_paths(Example1Oracle{1.0, 0.5, 0.3}, noise, 0.5);
  EXPECT_LT(oracle_diff("p", ref.adj1.p, exact.p).relative_rms, 0.1);
  EXPECT_LT(oracle_diff("q", ref.adj1.q, exact.q).relative_rms, 0.2);
  EXPECT_LT(oracle_diff("P", ref.adj2->P, exact.P).relative_rms, 0.05);
}

TEST(Adjoints, Example2SecondAdjointIsDeterministic) {
  // x - 1 is a martingale-scaled process and h_xx = s, so P solves an ODE.
  for (int s : {-1, 1}) {
    const auto problem = make_example2(s);
    const auto noise = sample_brownian(TimeGrid(1.0, 256), 1024, 1, 10);
    const auto ref = solve_reference(*problem, constant(0.0), noise, {},
                                     Executor(), true, false);
    const double expected = example2_P(s, 0.0, 0.0, 0.0, 1.0, 1.0);
    double sum = 0.0;
    for (std::size_t path = 0; path < 1024; ++path) sum += ref.adj2->P(path, 0);
    EXPECT_NEAR(sum / 1024.0, expected, 0.05 * std::abs(expected));
  }
}

TEST(Reference, BitIdenticalAcrossWorkerCounts) {
  const auto problem = make_affine_problem(random_affine_spec(12, 2, 1, 2));
  const auto noise = sample_brownian(TimeGrid(1.0, 32), 300, 1, 11);
  const auto ubar = ControlProcess::constant(Vec::Zero(2));
  const auto a = solve_reference(*problem, ubar, noise, {}, Executor(1));
  const auto b = solve_reference(*problem, ubar, noise, {}, Executor(3));
  EXPECT_TRUE(a.cost.y == b.cost.y);
  EXPECT_TRUE(a.cost.z == b.cost.z);
  EXPECT_TRUE(a.adj1.p == b.adj1.p);
  EXPECT_TRUE(a.adj1.q == b.adj1.q);
  EXPECT_TRUE(a.adj2->P == b.adj2->P);
  EXPECT_TRUE(*a.gamma == *b.gamma);
}

TEST(Stability, Example1RatiosAreFlat) {
  const auto problem = make_example1(1.0, 0.5, 0.3);
  const auto noise = sample_brownian(TimeGrid(1.0, 64), 1024, 1, 12);
  const auto base = euler_forward(*problem, constant(0.5), noise);
  const auto report =
      bsde_stability_check(*problem, base, noise, {1.0, 0.1, 0.01}, {});
  ASSERT_EQ(report.levels.size(), 3u);
  EXPECT_TRUE(report.pass);
  EXPECT_LE(report.spread, 2.0);
  for (const auto& level : report.levels) {
    EXPECT_GT(level.difference_norm, 0.0);
    EXPECT_NEAR(level.ratio, report.levels[0].ratio,
                0.5 * report.levels[0].ratio);
  }
}

TEST(Diagnostics, JsonLinesParse) {
  const auto problem = make_example2(1);
  const auto noise = sample_brownian(TimeGrid(1.0, 8), 50, 1, 13);
  const auto base = euler_forward(*problem, constant(1.0), noise);
  const auto cost = solve_cost_bsde(*problem, base, noise, {});
  std::ostringstream out;
  write_diagnostics_jsonl(out, "cost", cost.diagnostics);
  std::istringstream in(out.str());
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    const auto doc = nlohmann::json::parse(line);
    EXPECT_EQ(doc.at("solver"), "cost");
    EXPECT_TRUE(doc.contains("residual_rms"));
    ++count;
  }
  EXPECT_EQ(count, 8);
}

}  // namespace
}  // namespace rsmp
