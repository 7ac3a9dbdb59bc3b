#pragma once

#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rsmp/brownian.hpp"
#include "rsmp/executor.hpp"
#include "rsmp/hamiltonian.hpp"
#include "rsmp/path_array.hpp"
#include "rsmp/problem.hpp"
#include "rsmp/regression.hpp"
#include "rsmp/sde.hpp"
#include "rsmp/stats.hpp"

namespace rsmp {

/// Per-step regression diagnostics of a backward solve.
struct StepDiagnostics {
  std::size_t step = 0;
  Eigen::Index basis_size = 0;
  int active_features = 0;
  double condition = 1.0;
  double residual_rms = 0.0;
};

/// Processes whose node-k rows are concatenated into the regression
/// features at node k.
using FeatureSet = std::vector<const PathArray*>;

/// A vector BSDE  dY = -F(t, Y, Z) dt + Z dW  solved by
///   T_k   = R_{k+1} + h S_k
///   Yhat  = E[T_k | features_k]
///   O_k   = Y_{k+1} + h S_k
///   Z^j_k = E[(O_k - E[O_k | features_k]) dW^j_k | features_k] / h
///   Y_k   = Yhat + h F_k(Yhat, Z_k)
///   R_k   = T_k + h F_k(Yhat, Z_k)
/// with R_{k+1} = Y_{k+1} (so T_k = O_k) in the one-step scheme. S_k is an
/// optional source that may look ahead to node k+1.
struct BackwardSpec {
  using CVec = Eigen::Map<const Eigen::VectorXd>;
  using CMat = Eigen::Map<const Eigen::MatrixXd>;
  using Out = Eigen::Map<Eigen::VectorXd>;

  std::size_t width = 1;
  FeatureSet features;
  std::function<void(std::size_t step, std::size_t path, Out out)> source;
  /// z is width x d.
  std::function<void(std::size_t step, std::size_t path, CVec yhat, CMat z,
                     Out out)>
      driver;
  /// Applied to Y_k on every path after the driver step.
  std::function<void(Out y)> project;
};

/// y is M x (N+1) x c; z is M x N x (c d) with index j*c + i.
struct BackwardSolution {
  PathArray y;
  PathArray z;
  /// R_k - sum_{j>=k} Z_j dW_j with R_k = terminal + sum_{j>=k} h (S_j +
  /// F_j). Its conditional mean given F_k is Y_k.
  PathArray pathwise;
  Eigen::VectorXd y0;
  /// Sample standard error of R_0, without the martingale correction.
  Eigen::VectorXd y0_se;
  std::vector<StepDiagnostics> diagnostics;
};

BackwardSolution solve_backward(const BackwardSpec& spec,
                                const Eigen::MatrixXd& terminal,
                                const PathBatch& noise,
                                const RegressionOptions& options,
                                const Executor& executor = Executor());

struct CostSolution {
  PathArray y;  // M x (N+1) x 1
  PathArray z;  // M x N x d
  Estimate y0;
  std::vector<StepDiagnostics> diagnostics;
};

struct AdjointFirst {
  PathArray p;  // M x (N+1) x n
  PathArray q;  // M x N x (n d), index j*n + i
  PathArray p_path;  // pathwise targets of p
  std::vector<StepDiagnostics> diagnostics;
};

struct AdjointSecond {
  PathArray P;  // M x (N+1) x (n n), column-major
  PathArray Q;  // M x N x (n n d), index j*n*n + column-major entry
  PathArray P_path;  // pathwise targets of P
  std::vector<StepDiagnostics> diagnostics;
};

struct VariationCost {
  PathArray y;  // M x (N+1) x 1
  PathArray z;  // M x N x d
  Estimate y0;
  std::vector<StepDiagnostics> diagnostics;
};

/// Cost BSDE with y_N = h(x_N). Features default to the state paths.
CostSolution solve_cost_bsde(const ControlProblem& problem,
                             const StatePaths& states, const PathBatch& noise,
                             const RegressionOptions& options,
                             const Executor& executor = Executor(),
                             const FeatureSet& features = {});

/// Cost BSDE with a given terminal value (M x 1) instead of h(x_N).
CostSolution solve_cost_bsde_terminal(const ControlProblem& problem,
                                      const StatePaths& states,
                                      const Eigen::MatrixXd& terminal,
                                      const PathBatch& noise,
                                      const RegressionOptions& options,
                                      const Executor& executor = Executor(),
                                      const FeatureSet& features = {});

/// Cost along perturbed paths as ybar + dy, where (dy, dz) solves the BSDE
/// of the difference: terminal h(x_N) - h(xbar_N) and driver
/// f(x, ybar + dy, zbar + dz, u) - f(xbar, ybar, zbar, ubar). Regressed on
/// (xbar, x - xbar); y0.se combines both standard errors.
CostSolution solve_cost_difference(const ControlProblem& problem,
                                   const StatePaths& base,
                                   const CostSolution& cost,
                                   const StatePaths& perturbed,
                                   const PathBatch& noise,
                                   const RegressionOptions& options,
                                   const Executor& executor = Executor());

AdjointFirst solve_first_adjoint(const ControlProblem& problem,
                                 const StatePaths& base,
                                 const CostSolution& cost,
                                 const PathBatch& noise,
                                 const RegressionOptions& options,
                                 const Executor& executor = Executor());

AdjointSecond solve_second_adjoint(const ControlProblem& problem,
                                   const StatePaths& base,
                                   const CostSolution& cost,
                                   const AdjointFirst& adj1,
                                   const PathBatch& noise,
                                   const RegressionOptions& options,
                                   const Executor& executor = Executor());

/// y1 with source p.db + df, where db, df compare u_eps with ubar along
/// xbar. u_eps is M x N x m.
VariationCost solve_variation_cost_first(const ControlProblem& problem,
                                         const StatePaths& base,
                                         const CostSolution& cost,
                                         const AdjointFirst& adj1,
                                         const PathArray& u_eps,
                                         const PathBatch& noise,
                                         const RegressionOptions& options,
                                         const Executor& executor = Executor());

/// y2 with source <P db, x1> + dG . x1.
VariationCost solve_variation_cost_second(
    const ControlProblem& problem, const StatePaths& base,
    const CostSolution& cost, const AdjointFirst& adj1,
    const AdjointSecond& adj2, const PathArray& u_eps, const PathArray& x1,
    const PathBatch& noise, const RegressionOptions& options,
    const Executor& executor = Executor());

/// E sum_k gamma_{k+1} (p_{k+1}.db_k + df_k) h: the gamma representation of
/// y1(0).
Estimate gamma_duality_y1(const ControlProblem& problem,
                          const StatePaths& base, const CostSolution& cost,
                          const AdjointFirst& adj1, const PathArray& u_eps,
                          const PathArray& gamma, const PathBatch& noise,
                          const Executor& executor = Executor());

/// E sum_k gamma_{k+1} (<P_{k+1} db_k, x1_{k+1}> + dG_k . x1_{k+1}) h: the
/// gamma representation of y2(0).
Estimate gamma_duality_y2(const ControlProblem& problem,
                          const StatePaths& base, const CostSolution& cost,
                          const AdjointFirst& adj1, const AdjointSecond& adj2,
                          const PathArray& u_eps, const PathArray& x1,
                          const PathArray& gamma, const PathBatch& noise,
                          const Executor& executor = Executor());

/// Per-path source values on each step, shared by the backward solves and
/// the gamma representations. M x N x 1.
PathArray first_variation_source(const ControlProblem& problem,
                                 const StatePaths& base,
                                 const CostSolution& cost,
                                 const AdjointFirst& adj1,
                                 const PathArray& u_eps,
                                 const Executor& executor = Executor());
PathArray second_variation_source(const ControlProblem& problem,
                                  const StatePaths& base,
                                  const CostSolution& cost,
                                  const AdjointFirst& adj1,
                                  const AdjointSecond& adj2,
                                  const PathArray& u_eps, const PathArray& x1,
                                  const Executor& executor = Executor());

/// Reference point of step k on one path (t_k, xbar_k, ybar_k, zbar_k).
StatePoint state_point(const StatePaths& base, const CostSolution& cost,
                       const TimeGrid& grid, std::size_t path, std::size_t k);
/// Adjoint values at node k. q, Q are read from step min(k, N-1); P is left
/// empty when adj2 is null. With `pathwise`, p and P are the pathwise
/// targets, whose conditional means are the regressed values.
AdjointPoint adjoint_point(const ControlProblem& problem,
                           const AdjointFirst& adj1, const AdjointSecond* adj2,
                           std::size_t path, std::size_t k,
                           bool pathwise = false);

struct StabilityLevel {
  double delta = 0.0;
  double perturbation_norm = 0.0;
  /// sqrt(E sup_k |dy_k|^2 + E sum_k |dz_k|^2 h).
  double difference_norm = 0.0;
  double ratio = 0.0;
  /// max_k sqrt(E|dy_k|^2) / sqrt(E|dy_N|^2).
  double pointwise_ratio = 0.0;
  bool zero_difference = false;
};

struct StabilityReport {
  std::vector<StabilityLevel> levels;
  /// max/min of the nonzero ratios.
  double spread = 1.0;
  bool pass = true;
};

/// Perturbs the terminal value by delta * xi with xi ~ U(-1,1) per path,
/// re-solves the cost BSDE on the same features and reports the difference
/// norms. Passes when nonzero ratios lie within a factor 2 of each other.
StabilityReport bsde_stability_check(const ControlProblem& problem,
                                     const StatePaths& states,
                                     const PathBatch& noise,
                                     const std::vector<double>& deltas,
                                     const RegressionOptions& options,
                                     const Executor& executor = Executor());

/// One JSON object per line: {"solver", "step", "basis", "features",
/// "condition", "residual_rms"}.
void write_diagnostics_jsonl(std::ostream& out, const std::string& solver,
                             const std::vector<StepDiagnostics>& diagnostics);

}  // namespace rsmp
