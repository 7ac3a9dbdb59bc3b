#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rsmp/brownian.hpp"
#include "rsmp/bsde.hpp"
#include "rsmp/control.hpp"
#include "rsmp/executor.hpp"
#include "rsmp/hamiltonian.hpp"
#include "rsmp/problem.hpp"
#include "rsmp/regression.hpp"
#include "rsmp/sde.hpp"
#include "rsmp/stats.hpp"

namespace rsmp {

/// Everything computed along the reference control on one batch.
struct ReferenceSolution {
  PathBatch noise;
  StatePaths base;
  CostSolution cost;
  AdjointFirst adj1;
  std::optional<AdjointSecond> adj2;
  /// gamma along the reference (M x (N+1) x 1), filled on demand.
  std::optional<PathArray> gamma;
  /// Independent solves on disjoint path blocks of `noise`. When present,
  /// check standard errors include the spread of the block estimates.
  std::vector<ReferenceSolution> replicates;
};

/// Forward state, cost BSDE and first adjoint; the second adjoint and gamma
/// when asked for.
ReferenceSolution solve_reference(const ControlProblem& problem,
                                  const ControlProcess& ubar,
                                  PathBatch noise,
                                  const RegressionOptions& options,
                                  const Executor& executor = Executor(),
                                  bool second_order = true,
                                  bool with_gamma = true);

/// Splits the batch into `batches` disjoint blocks and solves each one on
/// its own. Fewer blocks are used when a block would hold less than
/// kMinReplicatePaths paths; below two blocks nothing is attached.
inline constexpr std::size_t kMinReplicatePaths = 64;
void attach_replicates(const ControlProblem& problem,
                       const ControlProcess& ubar, ReferenceSolution& ref,
                       std::size_t batches, const RegressionOptions& options,
                       const Executor& executor = Executor());

enum class Verdict { kSatisfied, kViolated, kInconclusive };

const char* to_string(Verdict v);

struct CheckOptions {
  /// Flatness and violation tolerance; negative means
  /// relative_tolerance * (1 + H scale).
  double tolerance = -1.0;
  double relative_tolerance = 1e-2;
  /// Fraction of nodes on which flatness must hold.
  double flat_fraction = 0.99;
  /// Evaluate every `node_stride`-th node of 0..N-1.
  std::size_t node_stride = 1;
};

struct ConditionRecord {
  std::size_t node = 0;
  double t = 0.0;
  std::size_t control = 0;  // index into ConditionReport::controls
  Estimate stat;
  Verdict verdict = Verdict::kInconclusive;
};

/// Node-major table of E dH(t,v) (first order) or E S(t,v) (second order).
struct ConditionReport {
  enum class Order { kFirst, kSecond };

  Order order = Order::kFirst;
  std::vector<Vec> controls;
  std::vector<ConditionRecord> records;
  std::vector<std::size_t> nodes;
  std::vector<Verdict> node_verdicts;
  Verdict verdict = Verdict::kInconclusive;
  double tolerance = 0.0;
  double max_abs_mean = 0.0;
  /// Smallest mean and where it occurred.
  double min_mean = 0.0;
  std::size_t min_record = 0;

  /// "satisfied"/"violated"/"inconclusive" for the first order,
  /// "candidate"/"excluded"/"inconclusive" for the second.
  std::string label() const;
  const ConditionRecord& at(std::size_t node, std::size_t control) const;
};

/// Verdict of one estimate against a tolerance.
Verdict classify_estimate(const Estimate& e, double tolerance);

/// max_k E|H(t_k; ubar)| over nodes 0..N-1.
double hamiltonian_scale(const ControlProblem& problem,
                         const ReferenceSolution& ref,
                         const Executor& executor = Executor());

double resolve_tolerance(const ControlProblem& problem,
                         const ReferenceSolution& ref,
                         const CheckOptions& options,
                         const Executor& executor = Executor());

/// E dH(t,v) for every node and every point of the control set's evaluation
/// grid.
ConditionReport first_order_check(const ControlProblem& problem,
                                  const ReferenceSolution& ref,
                                  const CheckOptions& options = {},
                                  const Executor& executor = Executor());

struct FlatnessStat {
  Vec v;
  double max_abs_mean = 0.0;
  double flat_fraction = 0.0;
  bool flat = false;
  /// v coincides with ubar on (almost) every node and path.
  bool is_reference = false;
};

struct SingularityVerdict {
  enum class Kind { kFullySingular, kPartiallySingular, kNonsingular };

  std::vector<Vec> region;
  bool singular_on_region = false;
  Kind classification = Kind::kNonsingular;
  /// Flat points of the evaluation grid.
  std::vector<Vec> singular_set;
  std::vector<FlatnessStat> grid_stats;
  double tolerance = 0.0;

  std::string label() const;
};

/// Flat on V iff |E dH(t,v)| <= tol + 3 SE on a flat_fraction of the nodes
/// for every v in V. The classification scans the whole evaluation grid.
/// V must be a subset of the evaluation grid.
SingularityVerdict singularity_classify(const ControlProblem& problem,
                                        const ReferenceSolution& ref,
                                        const std::vector<Vec>& region,
                                        const CheckOptions& options = {},
                                        const Executor& executor = Executor());

/// E S(t,v) on V. Throws PreconditionError unless `singular` reports ubar
/// singular on its region, which is the V used here.
ConditionReport second_order_check(const ControlProblem& problem,
                                   const ReferenceSolution& ref,
                                   const SingularityVerdict& singular,
                                   const CheckOptions& options = {},
                                   const Executor& executor = Executor());

/// J1 = E sum_k gamma_{k+1} (p_{k+1}.db_k + df_k) h for u realized along
/// xbar. Needs ref.gamma.
Estimate directional_derivative_first(const ControlProblem& problem,
                                      const ReferenceSolution& ref,
                                      const ControlProcess& u,
                                      const Executor& executor = Executor());

/// J2 surrogate: E sum_k gamma_{k+1} (dG_k + db_k' P_{k+1}) x1_{k+1} h for
/// the spiked control u_eps. Needs ref.adj2 and ref.gamma.
Estimate directional_derivative_second(const ControlProblem& problem,
                                       const ReferenceSolution& ref,
                                       const ControlProcess& u_eps,
                                       const Executor& executor = Executor());

}  // namespace rsmp
