#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rsmp/control.hpp"
#include "rsmp/executor.hpp"
#include "rsmp/path_array.hpp"
#include "rsmp/problem.hpp"

namespace rsmp {

struct AssumptionCheck {
  std::string name;
  /// The constant the observed value is compared with.
  double bound = 0.0;
  /// Largest observed value over the samples.
  double worst = 0.0;
  bool pass = true;
  /// Human-readable sample point where `worst` was attained.
  std::string where;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  bool pass = true;

  const AssumptionCheck& check(const std::string& name) const;
};

struct ValidationOptions {
  std::size_t samples = 256;
  std::uint64_t seed = 0;
  /// Half-width of the sampling box around x0; y and z are drawn from
  /// [-radius, radius] as well.
  double radius = 1.0;
  /// Slack on every bound, relative to the bound.
  double slack = 1e-9;
  /// Analytic-vs-finite-difference comparison.
  double fd_step = 1e-4;
  double fd_tolerance = 1e-5;
};

/// Sampling-based check of the Lipschitz, growth and second-derivative
/// bounds, symmetry of the Hessians and, for problems with analytic
/// derivatives, agreement with central finite differences. Deterministic in
/// (problem, options). Throws InvalidProblem on a non-finite coefficient.
ValidationReport validate_problem(const ControlProblem& problem,
                                  const ValidationOptions& options,
                                  const Executor& executor = Executor());

/// Largest relative discrepancy between the problem's derivative bundle and
/// central finite differences at one point; entries are compared as
/// |a - fd| / max(1, |fd|).
double derivative_discrepancy(const ControlProblem& problem, double t,
                              const Vec& x, double y, const Vec& z,
                              const Vec& u, double step);

/// Moment exponent of the admissibility condition.
inline constexpr int kAdmissibilityMoment = 8;

/// max_k (mean over paths |u_k|^8)^(1/8) for realized controls (M x N x m).
double admissibility_norm(const PathArray& controls);

/// Realizes u along the state paths first.
double admissibility_norm(const ControlProblem& problem,
                          const ControlProcess& u, const TimeGrid& grid,
                          const PathArray& state);

}  // namespace rsmp
