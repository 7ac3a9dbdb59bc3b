#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "rsmp/brownian.hpp"
#include "rsmp/errors.hpp"
#include "rsmp/hamiltonian.hpp"
#include "rsmp/maximum_principle.hpp"
#include "rsmp/oracles.hpp"
#include "rsmp/registry.hpp"

namespace rsmp {
namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

ControlProcess constant(double u) { return ControlProcess::constant(v1(u)); }

TEST(ClassifyEstimate, Thresholds) {
  EXPECT_EQ(classify_estimate({0.0, 1.0}, 0.1), Verdict::kSatisfied);
  EXPECT_EQ(classify_estimate({-0.1, 1.0}, 0.1), Verdict::kSatisfied);
  EXPECT_EQ(classify_estimate({-0.12, 0.01}, 0.1), Verdict::kInconclusive);
  EXPECT_EQ(classify_estimate({-0.2, 0.0}, 0.1), Verdict::kViolated);
  EXPECT_EQ(classify_estimate({-0.131, 0.01}, 0.1), Verdict::kViolated);
}

StatePoint example1_point(const Example1Oracle& o, double t, double w,
                          double u, Example1Oracle::Point* exact) {
  *exact = o.eval(t, w, u);
  StatePoint s;
  s.t = t;
  s.x = exact->x;
  s.y = exact->y;
  s.z = Vec::Zero(1);
  return s;
}

TEST(Hamiltonian, VanishesAtReferenceControl) {
  const auto problem = make_affine_problem(random_affine_spec(4, 2, 2, 2));
  StatePoint s;
  s.t = 0.2;
  s.x = Vec::Constant(2, 0.4);
  s.y = -0.3;
  s.z = Vec::Constant(2, 0.1);
  AdjointPoint a;
  a.p = Vec::Constant(2, 1.5);
  a.q = Mat::Constant(2, 2, -0.7);
  a.P = Mat::Identity(2, 2);
  Vec u(2);
  u << 0.3, -0.9;
  EXPECT_EQ(delta_hamiltonian(*problem, s, u, u, a), 0.0);
  EXPECT_EQ(second_order_quantity(*problem, s, u, u, a), 0.0);
  EXPECT_TRUE(delta_g(*problem, s, u, u, a).isZero(0.0));
  EXPECT_TRUE(delta_b(*problem, s, u, u).isZero(0.0));
}

TEST(Hamiltonian, Example1OracleIsFlatAndSecondOrderZero) {
  const Example1Oracle o{1.0, 0.5, 0.3, 1.0};
  const auto problem = make_example1(1.0, 0.5, 0.3);
  for (double t : {0.0, 0.4, 0.8}) {
    Example1Oracle::Point e;
    const StatePoint s = example1_point(o, t, 0.37, 0.5, &e);
    AdjointPoint a{e.p, Mat(e.q), e.P};
    for (double v : {-1.0, 0.0, 1.0}) {
      EXPECT_NEAR(delta_hamiltonian(*problem, s, v1(v), v1(0.5), a), 0.0,
                  1e-14);
      EXPECT_NEAR(second_order_quantity(*problem, s, v1(v), v1(0.5), a), 0.0,
                  1e-13);
      const Vec db = delta_b(*problem, s, v1(v), v1(0.5));
      EXPECT_NEAR(delta_g(*problem, s, v1(v), v1(0.5), a).dot(db),
                  o.delta_g_db(t, v, 0.5), 1e-13);
      EXPECT_NEAR(db.dot(e.P * db), o.db_P_db(t, v, 0.5), 1e-13);
    }
  }
}

ReferenceSolution small_reference(const ProblemPtr& problem, double u,
                                  std::size_t steps, std::size_t paths,
                                  std::uint64_t seed) {
  return solve_reference(*problem, constant(u),
                         sample_brownian(TimeGrid(1.0, steps), paths, 1, seed),
                         {}, Executor(), true, false);
}

TEST(Checks, Example1IsFlatEverywhere) {
  const auto problem = make_example1(1.0, 0.5, 0.3);
  auto ref = small_reference(problem, 0.5, 64, 1024, 20);
  attach_replicates(*problem, constant(0.5), ref, 8, {});
  const auto first = first_order_check(*problem, ref);
  EXPECT_NE(first.verdict, Verdict::kViolated);
  EXPECT_EQ(first.records.size(), 64u * 21u);
  EXPECT_EQ(first.at(10, 3).node, 10u);
  EXPECT_THROW(first.at(64, 0), InvalidArgument);

  const auto singular = singularity_classify(
      *problem, ref, problem->control_set().evaluation_grid());
  EXPECT_EQ(singular.classification,
            SingularityVerdict::Kind::kFullySingular);
  EXPECT_TRUE(singular.singular_on_region);
  const auto second = second_order_check(*problem, ref, singular);
  EXPECT_NE(second.verdict, Verdict::kViolated);
}

TEST(Checks, NodeStride) {
  const auto problem = make_example2(1);
  const auto ref = small_reference(problem, 0.0, 32, 256, 21);
  CheckOptions opt;
  opt.node_stride = 5;
  const auto report = first_order_check(*problem, ref, opt);
  EXPECT_EQ(report.nodes, (std::vector<std::size_t>{0, 5, 10, 15, 20, 25, 30}));
  opt.node_stride = 0;
  EXPECT_THROW(first_order_check(*problem, ref, opt), InvalidArgument);
}

TEST(Checks, FixedToleranceIsUsed) {
  const auto problem = make_example2(1);
  const auto ref = small_reference(problem, 0.0, 16, 256, 22);
  CheckOptions opt;
  opt.tolerance = 0.25;
  EXPECT_EQ(first_order_check(*problem, ref, opt).tolerance, 0.25);
  EXPECT_GT(resolve_tolerance(*problem, ref, {}), 0.0);
}

TEST(Checks, SecondOrderNeedsSingularControl) {
  const auto problem = make_example2(1);
  const auto ref = small_reference(problem, 0.0, 16, 256, 23);
  SingularityVerdict not_singular;
  not_singular.region = {v1(1.0)};
  not_singular.singular_on_region = false;
  EXPECT_THROW(second_order_check(*problem, ref, not_singular),
               PreconditionError);

  auto no_adj2 = solve_reference(
      *problem, constant(0.0), sample_brownian(TimeGrid(1.0, 16), 256, 1, 23),
      {}, Executor(), false, false);
  SingularityVerdict singular = not_singular;
  singular.singular_on_region = true;
  EXPECT_THROW(second_order_check(*problem, no_adj2, singular),
               PreconditionError);
}

TEST(Checks, RegionMustBeOnTheGrid) {
  const auto problem = make_example2(1);
  const auto ref = small_reference(problem, 0.0, 16, 128, 24);
  EXPECT_THROW(singularity_classify(*problem, ref, {v1(0.5)}),
               InvalidArgument);
}

TEST(Checks, Example2SignDecidesSecondOrderVerdict) {
  for (int s : {-1, 1}) {
    const auto problem = make_example2(s);
    auto ref = small_reference(problem, 0.0, 128, 2048, 25);
    attach_replicates(*problem, constant(0.0), ref, 8, {});
    const auto singular = singularity_classify(
        *problem, ref, problem->control_set().evaluation_grid());
    ASSERT_TRUE(singular.singular_on_region) << s;
    const auto second = second_order_check(*problem, ref, singular);
    EXPECT_EQ(second.verdict,
              s > 0 ? Verdict::kSatisfied : Verdict::kViolated);
    EXPECT_EQ(second.label(), s > 0 ? "candidate" : "excluded");
    // S(0, v) = s P(0) v^2 with P(0) = s e.
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = second.controls[c][0];
      const auto& r = second.at(0, c);
      EXPECT_NEAR(r.stat.value, s * std::numbers::e * v * v, 0.15);
    }
  }
}

TEST(Replicates, BlockCountAndStandardErrors) {
  const auto problem = make_example1(1.0, 0.5, 0.3);
  auto ref = small_reference(problem, 0.5, 32, 512, 26);
  attach_replicates(*problem, constant(0.5), ref, 8, {});
  EXPECT_EQ(ref.replicates.size(), 8u);
  EXPECT_EQ(ref.replicates[3].noise.paths, 64u);
  EXPECT_TRUE(ref.replicates[0].adj2.has_value());

  attach_replicates(*problem, constant(0.5), ref, 16, {});
  EXPECT_EQ(ref.replicates.size(), 8u);

  const auto with = first_order_check(*problem, ref);
  ReferenceSolution plain = ref;
  plain.replicates.clear();
  const auto without = first_order_check(*problem, plain);
  ASSERT_EQ(with.records.size(), without.records.size());
  for (std::size_t i = 0; i < with.records.size(); ++i) {
    EXPECT_EQ(with.records[i].stat.value, without.records[i].stat.value);
    EXPECT_GE(with.records[i].stat.se, without.records[i].stat.se);
  }

  auto tiny = small_reference(problem, 0.5, 8, 100, 27);
  attach_replicates(*problem, constant(0.5), tiny, 8, {});
  EXPECT_TRUE(tiny.replicates.empty());
}

TEST(DirectionalDerivative, NeedsGamma) {
  const auto problem = make_example2(1);
  const auto ref = small_reference(problem, 0.0, 16, 64, 28);
  EXPECT_THROW(directional_derivative_first(*problem, ref, constant(1.0)),
               PreconditionError);
}

TEST(DirectionalDerivative, ZeroForTheReferenceControl) {
  const auto problem = make_example1(1.0, 0.5, 0.3);
  const auto ref = solve_reference(
      *problem, constant(0.5), sample_brownian(TimeGrid(1.0, 16), 64, 1, 29),
      {}, Executor(), true, true);
  const Estimate j1 =
      directional_derivative_first(*problem, ref, constant(0.5));
  EXPECT_EQ(j1.value, 0.0);
}

}  // namespace
}  // namespace rsmp
