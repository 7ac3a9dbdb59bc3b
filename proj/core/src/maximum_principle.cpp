#include "rsmp/maximum_principle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "rsmp/errors.hpp"

namespace rsmp {
namespace {

std::vector<std::size_t> evaluation_nodes(std::size_t steps,
                                          std::size_t stride) {
  if (stride == 0) throw InvalidArgument("node stride must be positive");
  std::vector<std::size_t> nodes;
  for (std::size_t k = 0; k < steps; k += stride) nodes.push_back(k);
  return nodes;
}

// Per path, returns the statistic as a function of v.
using PointFn = std::function<std::function<double(const Vec&)>(
    const StatePoint&, const AdjointPoint&, const Vec& ubar)>;

struct Table {
  std::vector<std::size_t> nodes;
  std::vector<Estimate> stats;  // node-major, then control
  std::vector<std::size_t> reference_hits;  // per control
};

std::vector<Estimate> node_stats(const ControlProblem& problem,
                                 const ReferenceSolution& ref,
                                 const std::vector<Vec>& controls,
                                 bool with_second,
                                 const std::vector<std::size_t>& nodes,
                                 const PointFn& fn, const Executor& executor,
                                 std::vector<std::size_t>* hits) {
  const TimeGrid& grid = ref.noise.grid;
  const std::size_t paths = ref.noise.paths;
  const std::size_t g = controls.size();
  std::vector<Estimate> stats(nodes.size() * g);
  if (hits) hits->assign(nodes.size() * g, 0);
  const AdjointSecond* adj2 = with_second ? &*ref.adj2 : nullptr;
  executor.for_each(nodes.size(), [&](std::size_t idx) {
    const std::size_t k = nodes[idx];
    std::vector<double> buf(g * paths);
    for (std::size_t path = 0; path < paths; ++path) {
      const StatePoint s = state_point(ref.base, ref.cost, grid, path, k);
      const AdjointPoint a =
          adjoint_point(problem, ref.adj1, adj2, path, k, true);
      const Vec ubar = ref.base.u.at(path, k);
      const auto at = fn(s, a, ubar);
      for (std::size_t c = 0; c < g; ++c) {
        if (hits && controls[c] == ubar) ++(*hits)[idx * g + c];
        buf[c * paths + path] = at(controls[c]);
      }
    }
    for (std::size_t c = 0; c < g; ++c) {
      stats[idx * g + c] = mean_estimate(
          std::span<const double>(buf.data() + c * paths, paths));
    }
  });
  return stats;
}

Table tabulate(const ControlProblem& problem, const ReferenceSolution& ref,
               const std::vector<Vec>& controls, bool with_second,
               std::size_t stride, const PointFn& fn,
               const Executor& executor) {
  const std::size_t g = controls.size();
  Table table;
  table.nodes = evaluation_nodes(ref.noise.grid.steps(), stride);
  std::vector<std::size_t> hits;
  table.stats = node_stats(problem, ref, controls, with_second, table.nodes,
                           fn, executor, &hits);
  table.reference_hits.assign(g, 0);
  for (std::size_t idx = 0; idx < table.nodes.size(); ++idx) {
    for (std::size_t c = 0; c < g; ++c) {
      table.reference_hits[c] += hits[idx * g + c];
    }
  }

  // Between-block spread, for error common to all paths of one solve.
  const std::size_t b = ref.replicates.size();
  if (b < 2) return table;
  std::vector<double> sum(table.stats.size(), 0.0);
  std::vector<double> sq(table.stats.size(), 0.0);
  for (const ReferenceSolution& rep : ref.replicates) {
    const auto stats = node_stats(problem, rep, controls, with_second,
                                  table.nodes, fn, executor, nullptr);
    for (std::size_t i = 0; i < stats.size(); ++i) {
      sum[i] += stats[i].value;
      sq[i] += stats[i].value * stats[i].value;
    }
  }
  const double nb = static_cast<double>(b);
  for (std::size_t i = 0; i < table.stats.size(); ++i) {
    const double mean = sum[i] / nb;
    const double var = std::max(0.0, (sq[i] - nb * mean * mean) / (nb - 1.0));
    table.stats[i].se = std::max(table.stats[i].se, std::sqrt(var / nb));
  }
  return table;
}

ConditionReport build_report(ConditionReport::Order order,
                             const std::vector<Vec>& controls,
                             const Table& table, const TimeGrid& grid,
                             double tolerance) {
  ConditionReport report;
  report.order = order;
  report.controls = controls;
  report.nodes = table.nodes;
  report.tolerance = tolerance;
  const std::size_t g = controls.size();
  bool any_violated = false;
  bool all_satisfied = true;
  report.min_mean = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < table.nodes.size(); ++idx) {
    Verdict node = Verdict::kSatisfied;
    for (std::size_t c = 0; c < g; ++c) {
      ConditionRecord r;
      r.node = table.nodes[idx];
      r.t = grid.time(r.node);
      r.control = c;
      r.stat = table.stats[idx * g + c];
      r.verdict = classify_estimate(r.stat, tolerance);
      if (r.verdict == Verdict::kViolated) {
        node = Verdict::kViolated;
      } else if (r.verdict == Verdict::kInconclusive &&
                 node == Verdict::kSatisfied) {
        node = Verdict::kInconclusive;
      }
      report.max_abs_mean = std::max(report.max_abs_mean,
                                     std::abs(r.stat.value));
      if (r.stat.value < report.min_mean) {
        report.min_mean = r.stat.value;
        report.min_record = report.records.size();
      }
      report.records.push_back(r);
    }
    any_violated = any_violated || node == Verdict::kViolated;
    all_satisfied = all_satisfied && node == Verdict::kSatisfied;
    report.node_verdicts.push_back(node);
  }
  if (report.records.empty()) report.min_mean = 0.0;
  report.verdict = any_violated    ? Verdict::kViolated
                   : all_satisfied ? Verdict::kSatisfied
                                   : Verdict::kInconclusive;
  return report;
}

PointFn delta_h_fn(const ControlProblem& problem) {
  return [&problem](const StatePoint& s, const AdjointPoint& a,
                    const Vec& ubar) {
    const double base = a.p.dot(problem.drift(s.t, s.x, ubar)) +
                        problem.generator(s.t, s.x, s.y, s.z, ubar);
    return [&problem, s, a, ubar, base](const Vec& v) {
      if (v == ubar) return 0.0;
      return a.p.dot(problem.drift(s.t, s.x, v)) +
             problem.generator(s.t, s.x, s.y, s.z, v) - base;
    };
  };
}

PointFn second_order_fn(const ControlProblem& problem) {
  return [&problem](const StatePoint& s, const AdjointPoint& a,
                    const Vec& ubar) {
    const Vec bbar = problem.drift(s.t, s.x, ubar);
    const Vec gbar = g_quantity(problem, s, ubar, a);
    return [&problem, s, a, ubar, bbar, gbar](const Vec& v) {
      if (v == ubar) return 0.0;
      const Vec db = problem.drift(s.t, s.x, v) - bbar;
      return (g_quantity(problem, s, v, a) - gbar).dot(db) +
             db.dot(a.P * db);
    };
  };
}

void require_reference(const ReferenceSolution& ref) {
  if (ref.base.x.paths() != ref.noise.paths ||
      ref.base.x.nodes() != ref.noise.grid.nodes()) {
    throw InvalidArgument("reference solution does not match its batch");
  }
}

}  // namespace

ReferenceSolution solve_reference(const ControlProblem& problem,
                                  const ControlProcess& ubar,
                                  PathBatch noise,
                                  const RegressionOptions& options,
                                  const Executor& executor, bool second_order,
                                  bool with_gamma) {
  StatePaths base = euler_forward(problem, ubar, noise, executor);
  CostSolution cost =
      solve_cost_bsde(problem, base, noise, options, executor);
  AdjointFirst adj1 =
      solve_first_adjoint(problem, base, cost, noise, options, executor);
  std::optional<AdjointSecond> adj2;
  if (second_order) {
    adj2 = solve_second_adjoint(problem, base, cost, adj1, noise, options,
                                executor);
  }
  std::optional<PathArray> gamma;
  if (with_gamma) {
    gamma = integrate_gamma(problem, base, cost.y, cost.z, noise, executor);
  }
  return {std::move(noise), std::move(base), std::move(cost), std::move(adj1),
          std::move(adj2), std::move(gamma), {}};
}

void attach_replicates(const ControlProblem& problem,
                       const ControlProcess& ubar, ReferenceSolution& ref,
                       std::size_t batches, const RegressionOptions& options,
                       const Executor& executor) {
  ref.replicates.clear();
  batches = std::min(batches, ref.noise.paths / kMinReplicatePaths);
  if (batches < 2) return;
  const std::size_t size = ref.noise.paths / batches;
  for (std::size_t i = 0; i < batches; ++i) {
    ref.replicates.push_back(solve_reference(
        problem, ubar, slice(ref.noise, i * size, (i + 1) * size), options,
        executor, ref.adj2.has_value(), false));
  }
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kSatisfied:
      return "satisfied";
    case Verdict::kViolated:
      return "violated";
    case Verdict::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

std::string ConditionReport::label() const {
  if (order == Order::kFirst) return to_string(verdict);
  switch (verdict) {
    case Verdict::kSatisfied:
      return "candidate";
    case Verdict::kViolated:
      return "excluded";
    case Verdict::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

const ConditionRecord& ConditionReport::at(std::size_t node,
                                           std::size_t control) const {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), node);
  if (it == nodes.end() || *it != node || control >= controls.size()) {
    throw InvalidArgument("no condition record at node " +
                          std::to_string(node));
  }
  return records[static_cast<std::size_t>(it - nodes.begin()) *
                     controls.size() +
                 control];
}

std::string SingularityVerdict::label() const {
  switch (classification) {
    case Kind::kFullySingular:
      return "fully singular";
    case Kind::kPartiallySingular:
      return "partially singular";
    case Kind::kNonsingular:
      return "nonsingular";
  }
  return "nonsingular";
}

Verdict classify_estimate(const Estimate& e, double tolerance) {
  if (e.value < -(tolerance + 3.0 * e.se)) return Verdict::kViolated;
  if (e.value >= -tolerance) return Verdict::kSatisfied;
  return Verdict::kInconclusive;
}

double hamiltonian_scale(const ControlProblem& problem,
                         const ReferenceSolution& ref,
                         const Executor& executor) {
  require_reference(ref);
  const TimeGrid& grid = ref.noise.grid;
  const std::size_t paths = ref.noise.paths;
  std::vector<double> per_node(grid.steps(), 0.0);
  executor.for_each(grid.steps(), [&](std::size_t k) {
    std::vector<double> buf(paths);
    for (std::size_t path = 0; path < paths; ++path) {
      const StatePoint s = state_point(ref.base, ref.cost, grid, path, k);
      const AdjointPoint a = adjoint_point(problem, ref.adj1, nullptr, path, k);
      const Vec u = ref.base.u.at(path, k);
      const Mat sigma = problem.diffusion(s.t, s.x);
      buf[path] = std::abs(a.p.dot(problem.drift(s.t, s.x, u)) +
                           (a.q.array() * sigma.array()).sum() +
                           problem.generator(s.t, s.x, s.y, s.z, u));
    }
    per_node[k] = mean_estimate(buf).value;
  });
  double scale = 0.0;
  for (double v : per_node) scale = std::max(scale, v);
  return scale;
}

double resolve_tolerance(const ControlProblem& problem,
                         const ReferenceSolution& ref,
                         const CheckOptions& options,
                         const Executor& executor) {
  if (options.tolerance >= 0.0) return options.tolerance;
  return options.relative_tolerance *
         (1.0 + hamiltonian_scale(problem, ref, executor));
}

ConditionReport first_order_check(const ControlProblem& problem,
                                  const ReferenceSolution& ref,
                                  const CheckOptions& options,
                                  const Executor& executor) {
  require_reference(ref);
  const std::vector<Vec>& controls = problem.control_set().evaluation_grid();
  if (controls.empty()) {
    throw InvalidArgument("control set has an empty evaluation grid");
  }
  const double tol = resolve_tolerance(problem, ref, options, executor);
  const Table table = tabulate(
      problem, ref, controls, false, options.node_stride,
      delta_h_fn(problem),
      executor);
  return build_report(ConditionReport::Order::kFirst, controls, table,
                      ref.noise.grid, tol);
}

SingularityVerdict singularity_classify(const ControlProblem& problem,
                                        const ReferenceSolution& ref,
                                        const std::vector<Vec>& region,
                                        const CheckOptions& options,
                                        const Executor& executor) {
  require_reference(ref);
  const std::vector<Vec>& controls = problem.control_set().evaluation_grid();
  if (controls.empty()) {
    throw InvalidArgument("control set has an empty evaluation grid");
  }
  std::vector<std::size_t> region_index;
  for (const Vec& v : region) {
    std::size_t found = controls.size();
    for (std::size_t c = 0; c < controls.size(); ++c) {
      if (controls[c].size() == v.size() &&
          (controls[c] - v).lpNorm<Eigen::Infinity>() <= 1e-12) {
        found = c;
        break;
      }
    }
    if (found == controls.size()) {
      throw InvalidArgument(
          "singular region must be a subset of the control evaluation grid");
    }
    region_index.push_back(found);
  }

  SingularityVerdict out;
  out.region = region;
  out.tolerance = resolve_tolerance(problem, ref, options, executor);
  const Table table = tabulate(
      problem, ref, controls, false, options.node_stride,
      delta_h_fn(problem),
      executor);
  const std::size_t g = controls.size();
  const std::size_t nodes = table.nodes.size();
  const double total = static_cast<double>(nodes * ref.noise.paths);
  for (std::size_t c = 0; c < g; ++c) {
    FlatnessStat stat;
    stat.v = controls[c];
    std::size_t flat_nodes = 0;
    for (std::size_t idx = 0; idx < nodes; ++idx) {
      const Estimate& e = table.stats[idx * g + c];
      stat.max_abs_mean = std::max(stat.max_abs_mean, std::abs(e.value));
      if (std::abs(e.value) <= out.tolerance + 3.0 * e.se) ++flat_nodes;
    }
    stat.flat_fraction =
        nodes ? static_cast<double>(flat_nodes) / static_cast<double>(nodes)
              : 1.0;
    stat.flat = stat.flat_fraction >= options.flat_fraction;
    stat.is_reference = static_cast<double>(table.reference_hits[c]) >=
                        options.flat_fraction * total;
    if (stat.flat) out.singular_set.push_back(stat.v);
    out.grid_stats.push_back(std::move(stat));
  }

  out.singular_on_region = true;
  for (std::size_t c : region_index) {
    out.singular_on_region = out.singular_on_region && out.grid_stats[c].flat;
  }
  bool all_flat = true;
  bool nontrivial = false;
  for (const FlatnessStat& s : out.grid_stats) {
    all_flat = all_flat && s.flat;
    nontrivial = nontrivial || (s.flat && !s.is_reference);
  }
  out.classification = all_flat     ? SingularityVerdict::Kind::kFullySingular
                       : nontrivial ? SingularityVerdict::Kind::kPartiallySingular
                                    : SingularityVerdict::Kind::kNonsingular;
  return out;
}

ConditionReport second_order_check(const ControlProblem& problem,
                                   const ReferenceSolution& ref,
                                   const SingularityVerdict& singular,
                                   const CheckOptions& options,
                                   const Executor& executor) {
  require_reference(ref);
  if (!singular.singular_on_region || singular.region.empty()) {
    throw PreconditionError(
        "second-order check needs a control singular on the region; run the "
        "singularity classification first (classification: " +
        singular.label() + ")");
  }
  if (!ref.adj2) {
    throw PreconditionError("second-order check needs the second adjoint");
  }
  const double tol = resolve_tolerance(problem, ref, options, executor);
  const Table table = tabulate(
      problem, ref, singular.region, true, options.node_stride,
      second_order_fn(problem),
      executor);
  return build_report(ConditionReport::Order::kSecond, singular.region, table,
                      ref.noise.grid, tol);
}

Estimate directional_derivative_first(const ControlProblem& problem,
                                      const ReferenceSolution& ref,
                                      const ControlProcess& u,
                                      const Executor& executor) {
  require_reference(ref);
  if (!ref.gamma) {
    throw PreconditionError("directional derivative needs the gamma process");
  }
  const PathArray u_eps =
      realize_controls(problem, u, ref.noise.grid, ref.base.x, executor);
  return gamma_duality_y1(problem, ref.base, ref.cost, ref.adj1, u_eps,
                          *ref.gamma, ref.noise, executor);
}

Estimate directional_derivative_second(const ControlProblem& problem,
                                       const ReferenceSolution& ref,
                                       const ControlProcess& u_eps,
                                       const Executor& executor) {
  require_reference(ref);
  if (!ref.gamma || !ref.adj2) {
    throw PreconditionError(
        "second directional derivative needs gamma and the second adjoint");
  }
  const PathArray u =
      realize_controls(problem, u_eps, ref.noise.grid, ref.base.x, executor);
  const PathArray x1 =
      integrate_variation_first(problem, ref.base, u, ref.noise, executor);
  return gamma_duality_y2(problem, ref.base, ref.cost, ref.adj1, *ref.adj2, u,
                          x1, *ref.gamma, ref.noise, executor);
}

}  // namespace rsmp
