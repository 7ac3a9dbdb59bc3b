#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rsmp/control.hpp"
#include "rsmp/maximum_principle.hpp"
#include "rsmp/path_array.hpp"
#include "rsmp/sde.hpp"
#include "rsmp/stats.hpp"

namespace rsmp {

struct SpikeWindow {
  double start = 0.0;
  double end = 0.0;
  double length() const { return end - start; }
};

/// u_eps = replacement on the union of the windows, the reference elsewhere.
struct SpikeSpec {
  std::vector<SpikeWindow> windows;
  ControlProcess replacement;

  double measure() const;
};

/// Active flags per step for grid-aligned windows. Throws InvalidArgument on
/// an off-grid endpoint, an empty or reversed window, a window outside
/// [0, T], or overlapping windows.
std::vector<bool> spike_steps(const std::vector<SpikeWindow>& windows,
                              const TimeGrid& grid);

ControlProcess build_spike(const ControlProcess& ubar, const SpikeSpec& spike,
                           const TimeGrid& grid);

/// Smallest window the grid resolves, in steps.
inline constexpr std::size_t kMinSpikeSteps = 8;

/// One window [anchor, anchor + epsilon] snapped to the nearest nodes.
/// Throws InvalidArgument when it spans fewer than kMinSpikeSteps steps or
/// leaves [0, T].
SpikeWindow ladder_window(double epsilon, double anchor, const TimeGrid& grid);

/// The spiked control simulated on the reference batch, with its variations.
struct SpikeRun {
  double epsilon = 0.0;
  /// u_eps along xbar (M x N x m); the variation equations use this.
  PathArray u_on_base;
  StatePaths spiked;
  VariationPaths variations;
  /// Cost along x_eps, solved as ybar plus the difference BSDE.
  std::optional<CostSolution> cost;
};

/// The cost BSDE along the spiked paths is solved only when `cost_options`
/// is given; the cost residuals need it.
SpikeRun run_spike(const ControlProblem& problem, const ReferenceSolution& ref,
                   const ControlProcess& ubar, const SpikeSpec& spike,
                   const RegressionOptions* cost_options,
                   const Executor& executor = Executor());

struct StateResiduals {
  Estimate dev8;     // E sup |x_eps - xbar|^8
  Estimate x1_8;     // E sup |x1|^8
  Estimate first2;   // E sup |x_eps - xbar - x1|^2
  Estimate x2_2;     // E sup |x2|^2
  Estimate second2;  // E sup |x_eps - xbar - x1 - x2|^2
};

/// Sup over nodes. Components of a residual below the cancellation floor
/// 64 eps (|x_eps| + |xbar| + |x1| + |x2|) count as zero.
StateResiduals state_residuals(const ReferenceSolution& ref,
                               const SpikeRun& run);

struct CostResidualFirst {
  Estimate y4;  // E sup |y_eps - ybar - p.x1 - y1|^4
  Estimate z2;  // E sum_k |z_eps - zbar - p.sigma_x x1 - q.x1 - z1|^2 h
  Estimate y1_0;
};

/// Solves the spiked cost BSDE and y1, then the residuals.
CostResidualFirst cost_residual_first(const ControlProblem& problem,
                                      const ReferenceSolution& ref,
                                      const SpikeRun& run,
                                      const RegressionOptions& options,
                                      const Executor& executor = Executor());

struct CostResidualSecond {
  Estimate y2;  // E sup |y_eps - ybar - p.(x1 + x2) - x1' P x1 / 2 - y2|^2
  Estimate y2_0;
};

/// Throws PreconditionError unless every value u_eps takes off the
/// reference lies in the singular set of `singular`.
CostResidualSecond cost_residual_second(const ControlProblem& problem,
                                        const ReferenceSolution& ref,
                                        const SpikeRun& run,
                                        const SingularityVerdict& singular,
                                        const RegressionOptions& options,
                                        const Executor& executor = Executor());

struct RateFit {
  std::vector<double> epsilons;
  std::vector<double> norms;
  /// Levels used in the fit, after dropping non-positive norms.
  std::vector<std::size_t> used;
  double slope = 0.0;
  double half_width = 0.0;
  bool exact = false;
  std::vector<std::string> warnings;
};

/// OLS of log(norm) on log(epsilon); the half-width is the 97.5% Student-t
/// quantile with n-2 degrees of freedom times the slope's standard error.
/// All norms zero gives exact = true and an infinite slope; fewer than three
/// positive norms gives a NaN slope with a warning.
RateFit fit_rate(const std::vector<double>& epsilons,
                 const std::vector<double>& norms);

struct TaylorOptions {
  std::vector<double> ladder = {0.2, 0.1, 0.05, 0.025};
  double anchor = 0.0;
  bool cost_first = true;
  bool cost_second = true;
  RegressionOptions regression;
};

struct TaylorLevel {
  double epsilon = 0.0;
  StateResiduals state;
  std::optional<CostResidualFirst> cost_first;
  std::optional<CostResidualSecond> cost_second;
};

/// Residual name -> fit. Names: x_dev8, x1_8, x_first2, x2_2, x_second2,
/// y_first4, z_first2, y_second2.
struct TaylorReport {
  std::vector<TaylorLevel> levels;
  std::map<std::string, RateFit> fits;
};

/// Theoretical order of each fitted residual; o() orders are flagged.
struct RateTarget {
  double order = 0.0;
  bool little_o = false;
};
const std::map<std::string, RateTarget>& rate_targets();

/// Runs the ladder on the reference batch (common random numbers across
/// levels). `singular` is required when options.cost_second is set.
TaylorReport taylor_ladder(const ControlProblem& problem,
                           const ReferenceSolution& ref,
                           const ControlProcess& ubar,
                           const ControlProcess& replacement,
                           const TaylorOptions& options,
                           const SingularityVerdict* singular = nullptr,
                           const Executor& executor = Executor());

}  // namespace rsmp
