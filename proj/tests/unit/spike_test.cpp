#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "rsmp/brownian.hpp"
#include "rsmp/errors.hpp"
#include "rsmp/maximum_principle.hpp"
#include "rsmp/registry.hpp"
#include "rsmp/spike.hpp"

namespace rsmp {
namespace {

ControlProcess constant(double u) {
  return ControlProcess::constant(Vec::Constant(1, u));
}

TEST(SpikeSteps, MarksWindowSteps) {
  const TimeGrid grid(1.0, 8);
  const auto active = spike_steps({{0.25, 0.5}, {0.75, 1.0}}, grid);
  const std::vector<bool> expected = {false, false, true, true,
                                      false, false, true, true};
  EXPECT_EQ(active, expected);
  EXPECT_DOUBLE_EQ((SpikeSpec{{{0.25, 0.5}, {0.75, 1.0}}, constant(1.0)})
                       .measure(),
                   0.5);
}

TEST(SpikeSteps, RejectsBadWindows) {
  const TimeGrid grid(1.0, 8);
  EXPECT_THROW(spike_steps({{0.3, 0.5}}, grid), InvalidArgument);
  EXPECT_THROW(spike_steps({{0.5, 0.25}}, grid), InvalidArgument);
  EXPECT_THROW(spike_steps({{0.5, 0.5}}, grid), InvalidArgument);
  EXPECT_THROW(spike_steps({{0.75, 1.25}}, grid), InvalidArgument);
  EXPECT_THROW(spike_steps({{0.0, 0.5}, {0.25, 0.75}}, grid),
               InvalidArgument);
}

TEST(SpikeSteps, BuildSpikeSplicesControls) {
  const TimeGrid grid(1.0, 4);
  const auto u = build_spike(constant(0.0),
                             SpikeSpec{{{0.5, 0.75}}, constant(1.0)}, grid);
  EXPECT_EQ(u.value(1, 0.25, Vec::Zero(1))[0], 0.0);
  EXPECT_EQ(u.value(2, 0.5, Vec::Zero(1))[0], 1.0);
}

TEST(LadderWindow, SnapsToNodes) {
  const TimeGrid grid(1.0, 512);
  const SpikeWindow w = ladder_window(0.025, 0.0, grid);
  EXPECT_DOUBLE_EQ(w.start, 0.0);
  EXPECT_DOUBLE_EQ(w.end, 13.0 / 512.0);
  EXPECT_THROW(ladder_window(0.01, 0.0, grid), InvalidArgument);
  EXPECT_THROW(ladder_window(0.2, 0.9, grid), InvalidArgument);
}

TEST(FitRate, RecoversPowerLaw) {
  const std::vector<double> eps = {0.2, 0.1, 0.05, 0.025};
  std::vector<double> norms;
  for (double e : eps) norms.push_back(3.0 * std::pow(e, 4.0));
  const RateFit fit = fit_rate(eps, norms);
  EXPECT_NEAR(fit.slope, 4.0, 1e-12);
  EXPECT_LT(fit.half_width, 1e-9);
  EXPECT_FALSE(fit.exact);
  EXPECT_EQ(fit.used.size(), 4u);
}

TEST(FitRate, NoisyNormsGiveHalfWidth) {
  const std::vector<double> eps = {0.2, 0.1, 0.05, 0.025};
  const std::vector<double> norms = {std::pow(0.2, 2) * 1.1,
                                     std::pow(0.1, 2) * 0.9,
                                     std::pow(0.05, 2) * 1.1,
                                     std::pow(0.025, 2) * 0.9};
  const RateFit fit = fit_rate(eps, norms);
  EXPECT_NEAR(fit.slope, 2.0, 0.1);
  EXPECT_GT(fit.half_width, 0.0);
  EXPECT_LT(fit.half_width, 1.0);
}

TEST(FitRate, ExactAndDegenerateCases) {
  const std::vector<double> eps = {0.2, 0.1, 0.05, 0.025};
  const RateFit zero = fit_rate(eps, {0.0, 0.0, 0.0, 0.0});
  EXPECT_TRUE(zero.exact);
  EXPECT_TRUE(std::isinf(zero.slope));

  const RateFit few = fit_rate(eps, {1.0, 0.5, 0.0, 0.0});
  EXPECT_FALSE(few.exact);
  EXPECT_TRUE(std::isnan(few.slope));
  EXPECT_FALSE(few.warnings.empty());

  const RateFit dropped =
      fit_rate({0.8, 0.4, 0.2, 0.1, 0.05}, {64.0, 16.0, 4.0, 1.0, 0.0});
  EXPECT_EQ(dropped.used.size(), 4u);
  EXPECT_NEAR(dropped.slope, 2.0, 1e-12);

  EXPECT_THROW(fit_rate(eps, {1.0, 2.0, 3.0}), InvalidArgument);
  EXPECT_THROW(fit_rate({0.1, 0.05, 0.025}, {1.0, 2.0, 3.0}),
               InvalidArgument);
  EXPECT_THROW(fit_rate({0.1, 0.2, 0.05, 0.025}, {1.0, 2.0, 3.0, 4.0}),
               InvalidArgument);
}

TEST(RateTargets, KnownResiduals) {
  const auto& t = rate_targets();
  EXPECT_EQ(t.at("x_dev8").order, 8.0);
  EXPECT_EQ(t.at("x_first2").order, 4.0);
  EXPECT_EQ(t.at("y_first4").order, 4.0);
  EXPECT_TRUE(t.at("y_first4").little_o);
  EXPECT_TRUE(t.contains("y_second2"));
}

ReferenceSolution reference(const ProblemPtr& problem, double u,
                            std::size_t steps, std::size_t paths) {
  return solve_reference(
      *problem, constant(u),
      sample_brownian(TimeGrid(1.0, steps), paths, problem->d(), 31), {},
      Executor(), true, false);
}

TEST(SpikeRun, ReplacingWithTheReferenceIsExact) {
  const auto problem = make_example1(1.0, 0.5, 0.3);
  const auto ref = reference(problem, 0.5, 64, 64);
  const auto run =
      run_spike(*problem, ref, constant(0.5),
                SpikeSpec{{{0.25, 0.5}}, constant(0.5)}, nullptr);
  EXPECT_TRUE(run.spiked.x == ref.base.x);
  const StateResiduals r = state_residuals(ref, run);
  EXPECT_EQ(r.dev8.value, 0.0);
  EXPECT_EQ(r.first2.value, 0.0);
  EXPECT_EQ(r.second2.value, 0.0);
  EXPECT_FALSE(run.cost.has_value());
}

TEST(SpikeRun, Example2FirstVariationIsExact) {
  // Drift u and diffusion x - 1 are linear, so x_eps - xbar = x1.
  const auto problem = make_example2(1);
  const auto ref = reference(problem, 0.0, 128, 128);
  const auto run =
      run_spike(*problem, ref, constant(0.0),
                SpikeSpec{{{0.0, 0.25}}, constant(1.0)}, nullptr);
  const StateResiduals r = state_residuals(ref, run);
  EXPECT_GT(r.dev8.value, 0.0);
  EXPECT_EQ(r.first2.value, 0.0);
  EXPECT_EQ(r.x2_2.value, 0.0);
}

TEST(Taylor, StateOrdersOnExample1) {
  const auto problem = make_example1(1.0, 0.5, 0.3);
  const auto ref = reference(problem, 0.5, 512, 512);
  TaylorOptions opt;
  opt.cost_first = false;
  opt.cost_second = false;
  const auto report =
      taylor_ladder(*problem, ref, constant(0.5), constant(-0.5), opt);
  ASSERT_EQ(report.levels.size(), 4u);
  EXPECT_NEAR(report.fits.at("x_dev8").slope, 8.0, 1.0);
  EXPECT_NEAR(report.fits.at("x1_8").slope, 8.0, 1.0);
  EXPECT_GT(report.fits.at("x_first2").slope, 3.0);
  EXPECT_FALSE(report.fits.contains("y_first4"));
}

TEST(Taylor, SecondOrderCostNeedsVerdict) {
  const auto problem = make_example2(1);
  const auto ref = reference(problem, 0.0, 512, 128);
  TaylorOptions opt;
  EXPECT_THROW(taylor_ladder(*problem, ref, constant(0.0), constant(1.0), opt),
               PreconditionError);
}

TEST(Taylor, SecondOrderCostRejectsNonSingularReplacement) {
  const auto problem = make_example2(1);
  const auto ref = reference(problem, 0.0, 512, 128);
  SingularityVerdict verdict;
  verdict.region = {Vec::Constant(1, 1.0)};
  verdict.singular_on_region = true;
  verdict.singular_set = {Vec::Constant(1, 0.0)};
  TaylorOptions opt;
  opt.cost_first = false;
  EXPECT_THROW(taylor_ladder(*problem, ref, constant(0.0), constant(1.0), opt,
                             &verdict),
               PreconditionError);
}

}  // namespace
}  // namespace rsmp
