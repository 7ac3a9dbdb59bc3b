#include "rsmp/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "rsmp/errors.hpp"
#include "rsmp/random.hpp"

namespace rsmp {
namespace {

constexpr std::uint32_t kStabilityDomain = 0x53544142u;

Eigen::Index feature_width(const FeatureSet& features) {
  Eigen::Index width = 0;
  for (const PathArray* f : features) {
    width += static_cast<Eigen::Index>(f->width());
  }
  return width;
}

void fill_features(const FeatureSet& features, std::size_t k,
                   Eigen::MatrixXd& out) {
  Eigen::Index col = 0;
  for (const PathArray* f : features) {
    for (std::size_t c = 0; c < f->width(); ++c, ++col) {
      for (Eigen::Index path = 0; path < out.rows(); ++path) {
        out(path, col) = (*f)(static_cast<std::size_t>(path), k, c);
      }
    }
  }
}

void check_cost(const CostSolution& cost, const PathBatch& noise) {
  if (cost.y.paths() != noise.paths || cost.y.nodes() != noise.grid.nodes()) {
    throw InvalidArgument("cost solution does not match the batch");
  }
}

void check_adj1(const AdjointFirst& adj1, const PathBatch& noise) {
  if (adj1.p.paths() != noise.paths || adj1.p.nodes() != noise.grid.nodes()) {
    throw InvalidArgument("first adjoint does not match the batch");
  }
}

void check_shape(const PathArray& a, const PathBatch& noise, std::size_t nodes,
                 const char* what) {
  if (a.paths() != noise.paths || a.nodes() != nodes) {
    throw InvalidArgument(std::string(what) + " does not match the batch");
  }
}

VariationCost to_variation(BackwardSolution&& sol) {
  return {std::move(sol.y), std::move(sol.z), {sol.y0[0], sol.y0_se[0]},
          std::move(sol.diagnostics)};
}

Estimate gamma_weighted(const PathArray& source, const PathArray& gamma,
                        const PathBatch& noise, const Executor& executor) {
  const double h = noise.grid.step_size();
  std::vector<double> per_path(noise.paths, 0.0);
  executor.for_each(noise.paths, [&](std::size_t path) {
    double acc = 0.0;
    for (std::size_t k = 0; k < noise.grid.steps(); ++k) {
      const double s = source(path, k);
      if (s != 0.0) acc += gamma(path, k + 1) * s * h;
    }
    per_path[path] = acc;
  });
  return mean_estimate(per_path);
}

}  // namespace

BackwardSolution solve_backward(const BackwardSpec& spec,
                                const Eigen::MatrixXd& terminal,
                                const PathBatch& noise,
                                const RegressionOptions& options,
                                const Executor& executor) {
  const std::size_t paths = noise.paths;
  const std::size_t steps = noise.grid.steps();
  const auto c = static_cast<Eigen::Index>(spec.width);
  const int d = noise.noise_dim;
  const double h = noise.grid.step_size();
  if (terminal.rows() != static_cast<Eigen::Index>(paths) ||
      terminal.cols() != c) {
    throw InvalidArgument("terminal value does not match the batch");
  }
  for (const PathArray* f : spec.features) {
    if (f == nullptr || f->paths() != paths || f->nodes() < steps) {
      throw InvalidArgument("regression feature does not match the batch");
    }
  }
  if (!terminal.allFinite()) {
    throw SolverDivergence("non-finite terminal value");
  }

  BackwardSolution sol;
  sol.y = PathArray(paths, steps + 1, spec.width);
  sol.z = PathArray(paths, steps, spec.width * d);
  sol.pathwise = PathArray(paths, steps + 1, spec.width);
  sol.diagnostics.reserve(steps);

  Eigen::MatrixXd y = terminal;
  Eigen::MatrixXd carry = terminal;
  Eigen::MatrixXd martingale = Eigen::MatrixXd::Zero(terminal.rows(), c);
  for (std::size_t path = 0; path < paths; ++path) {
    for (Eigen::Index i = 0; i < c; ++i) {
      sol.y(path, steps, i) = y(path, i);
      sol.pathwise(path, steps, i) = y(path, i);
    }
  }

  Eigen::MatrixXd features(paths, feature_width(spec.features));
  Eigen::MatrixXd one_step(paths, c);
  Eigen::MatrixXd weighted(paths, c * d);

  for (std::size_t step = steps; step-- > 0;) {
    one_step = y;
    if (spec.source) {
      executor.for_blocks(paths, [&](std::size_t, std::size_t begin,
                                     std::size_t end) {
        Eigen::VectorXd s(c);
        for (std::size_t path = begin; path < end; ++path) {
          s.setZero();
          spec.source(step, path, BackwardSpec::Out(s.data(), c));
          one_step.row(path) += h * s.transpose();
          carry.row(path) += h * s.transpose();
        }
      });
    }
    const Eigen::MatrixXd& target = options.multistep ? carry : one_step;
    fill_features(spec.features, step, features);
    const LeastSquaresProjector projector(features, options, executor);
    const Eigen::MatrixXd yhat = projector.fit(target);
    const Eigen::MatrixXd residual = target - yhat;
    // z comes from the one-step target in both schemes.
    const Eigen::MatrixXd z_residual =
        options.multistep ? Eigen::MatrixXd(one_step - projector.fit(one_step))
                          : residual;
    for (int j = 0; j < d; ++j) {
      for (Eigen::Index i = 0; i < c; ++i) {
        for (std::size_t path = 0; path < paths; ++path) {
          weighted(path, j * c + i) =
              z_residual(path, i) * noise.increments(path, step, j);
        }
      }
    }
    const Eigen::MatrixXd zhat = projector.fit(weighted) / h;

    executor.for_blocks(paths, [&](std::size_t, std::size_t begin,
                                   std::size_t end) {
      Eigen::VectorXd yrow(c);
      Eigen::VectorXd zrow(c * d);
      Eigen::VectorXd f(c);
      for (std::size_t path = begin; path < end; ++path) {
        yrow = yhat.row(path).transpose();
        zrow = zhat.row(path).transpose();
        f.setZero();
        if (spec.driver) {
          spec.driver(step, path, BackwardSpec::CVec(yrow.data(), c),
                      BackwardSpec::CMat(zrow.data(), c, d),
                      BackwardSpec::Out(f.data(), c));
        }
        Eigen::VectorXd next = yrow + h * f;
        if (spec.project) spec.project(BackwardSpec::Out(next.data(), c));
        if (!next.allFinite() || !zrow.allFinite()) {
          throw SolverDivergence("non-finite backward value on path " +
                                 std::to_string(path) + " at step " +
                                 std::to_string(step));
        }
        for (Eigen::Index i = 0; i < c; ++i) {
          carry(path, i) += h * f[i];
          for (int j = 0; j < d; ++j) {
            martingale(path, i) +=
                zrow[j * c + i] * noise.increments(path, step, j);
          }
          sol.pathwise(path, step, i) = carry(path, i) - martingale(path, i);
          sol.y(path, step, i) = next[i];
        }
        y.row(path) = next.transpose();
        for (Eigen::Index i = 0; i < c * d; ++i) sol.z(path, step, i) = zrow[i];
      }
    });

    StepDiagnostics diag;
    diag.step = step;
    diag.basis_size = projector.basis_size();
    diag.active_features = projector.active_features();
    diag.condition = projector.condition();
    diag.residual_rms = std::sqrt(residual.squaredNorm() /
                                  static_cast<double>(residual.size()));
    sol.diagnostics.push_back(diag);
  }
  std::reverse(sol.diagnostics.begin(), sol.diagnostics.end());

  sol.y0.resize(c);
  sol.y0_se.resize(c);
  for (Eigen::Index i = 0; i < c; ++i) {
    std::vector<double> at0(paths);
    std::vector<double> rep(paths);
    for (std::size_t path = 0; path < paths; ++path) {
      at0[path] = sol.y(path, 0, i);
      rep[path] = carry(path, i);
    }
    sol.y0[i] = mean_estimate(at0).value;
    sol.y0_se[i] = mean_estimate(rep).se;
  }
  return sol;
}

StatePoint state_point(const StatePaths& base, const CostSolution& cost,
                       const TimeGrid& grid, std::size_t path, std::size_t k) {
  const std::size_t zk = std::min(k, grid.steps() - 1);
  return {grid.time(k), base.x.at(path, k), cost.y(path, k),
          cost.z.at(path, zk)};
}

AdjointPoint adjoint_point(const ControlProblem& problem,
                           const AdjointFirst& adj1, const AdjointSecond* adj2,
                           std::size_t path, std::size_t k, bool pathwise) {
  const int n = problem.n();
  const int d = problem.d();
  const std::size_t qk = std::min(k, adj1.q.nodes() - 1);
  AdjointPoint a;
  a.p = pathwise ? adj1.p_path.at(path, k) : adj1.p.at(path, k);
  a.q = Eigen::Map<const Eigen::MatrixXd>(adj1.q.row(path, qk), n, d);
  if (adj2 != nullptr) {
    const PathArray& P = pathwise ? adj2->P_path : adj2->P;
    a.P = Eigen::Map<const Eigen::MatrixXd>(P.row(path, k), n, n);
  }
  return a;
}

CostSolution solve_cost_bsde_terminal(const ControlProblem& problem,
                                      const StatePaths& states,
                                      const Eigen::MatrixXd& terminal,
                                      const PathBatch& noise,
                                      const RegressionOptions& options,
                                      const Executor& executor,
                                      const FeatureSet& features) {
  check_shape(states.x, noise, noise.grid.nodes(), "state paths");
  const TimeGrid& grid = noise.grid;
  BackwardSpec spec;
  spec.width = 1;
  spec.features = features.empty() ? FeatureSet{&states.x} : features;
  spec.driver = [&](std::size_t k, std::size_t path, BackwardSpec::CVec yhat,
                    BackwardSpec::CMat z, BackwardSpec::Out out) {
    const Vec zv = z.row(0).transpose();
    out[0] = problem.generator(grid.time(k), states.x.at(path, k), yhat[0], zv,
                               states.u.at(path, k));
  };
  BackwardSolution sol =
      solve_backward(spec, terminal, noise, options, executor);
  return {std::move(sol.y), std::move(sol.z), {sol.y0[0], sol.y0_se[0]},
          std::move(sol.diagnostics)};
}

CostSolution solve_cost_bsde(const ControlProblem& problem,
                             const StatePaths& states, const PathBatch& noise,
                             const RegressionOptions& options,
                             const Executor& executor,
                             const FeatureSet& features) {
  check_shape(states.x, noise, noise.grid.nodes(), "state paths");
  const std::size_t last = noise.grid.steps();
  Eigen::MatrixXd terminal(noise.paths, 1);
  for (std::size_t path = 0; path < noise.paths; ++path) {
    terminal(path, 0) = problem.terminal_cost(states.x.at(path, last));
  }
  return solve_cost_bsde_terminal(problem, states, terminal, noise, options,
                                  executor, features);
}

CostSolution solve_cost_difference(const ControlProblem& problem,
                                   const StatePaths& base,
                                   const CostSolution& cost,
                                   const StatePaths& perturbed,
                                   const PathBatch& noise,
                                   const RegressionOptions& options,
                                   const Executor& executor) {
  check_shape(base.x, noise, noise.grid.nodes(), "state paths");
  check_shape(perturbed.x, noise, noise.grid.nodes(), "perturbed paths");
  check_cost(cost, noise);
  const TimeGrid& grid = noise.grid;
  const std::size_t steps = grid.steps();
  const int d = problem.d();
  PathArray dx(noise.paths, grid.nodes(), base.x.width());
  Eigen::MatrixXd terminal(noise.paths, 1);
  for (std::size_t path = 0; path < noise.paths; ++path) {
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
      dx.at(path, k) = perturbed.x.at(path, k) - base.x.at(path, k);
    }
    terminal(path, 0) = problem.terminal_cost(perturbed.x.at(path, steps)) -
                        problem.terminal_cost(base.x.at(path, steps));
  }
  BackwardSpec spec;
  spec.width = 1;
  spec.features = {&base.x, &dx};
  spec.driver = [&](std::size_t k, std::size_t path, BackwardSpec::CVec yhat,
                    BackwardSpec::CMat z, BackwardSpec::Out out) {
    const StatePoint s = state_point(base, cost, grid, path, k);
    const Vec zv = s.z + Vec(z.row(0).transpose());
    out[0] = problem.generator(s.t, perturbed.x.at(path, k), s.y + yhat[0], zv,
                               perturbed.u.at(path, k)) -
             problem.generator(s.t, s.x, s.y, s.z, base.u.at(path, k));
  };
  BackwardSolution sol =
      solve_backward(spec, terminal, noise, options, executor);
  CostSolution out{PathArray(noise.paths, grid.nodes(), 1),
                   PathArray(noise.paths, steps, static_cast<std::size_t>(d)),
                   {cost.y0.value + sol.y0[0],
                    std::hypot(cost.y0.se, sol.y0_se[0])},
                   std::move(sol.diagnostics)};
  for (std::size_t path = 0; path < noise.paths; ++path) {
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
      out.y(path, k) = cost.y(path, k) + sol.y(path, k);
      if (k < steps) {
        for (int j = 0; j < d; ++j) {
          out.z(path, k, j) = cost.z(path, k, j) + sol.z(path, k, j);
        }
      }
    }
  }
  return out;
}

AdjointFirst solve_first_adjoint(const ControlProblem& problem,
                                 const StatePaths& base,
                                 const CostSolution& cost,
                                 const PathBatch& noise,
                                 const RegressionOptions& options,
                                 const Executor& executor) {
  check_shape(base.x, noise, noise.grid.nodes(), "state paths");
  check_cost(cost, noise);
  const TimeGrid& grid = noise.grid;
  const int n = problem.n();
  const int d = problem.d();
  Eigen::MatrixXd terminal(noise.paths, n);
  for (std::size_t path = 0; path < noise.paths; ++path) {
    terminal.row(path) =
        problem.terminal_gradient(base.x.at(path, grid.steps())).transpose();
  }
  BackwardSpec spec;
  spec.width = static_cast<std::size_t>(n);
  spec.features = {&base.x};
  spec.driver = [&](std::size_t k, std::size_t path, BackwardSpec::CVec p,
                    BackwardSpec::CMat q, BackwardSpec::Out out) {
    const StatePoint s = state_point(base, cost, grid, path, k);
    const Vec u = base.u.at(path, k);
    const GeneratorGradient g =
        problem.generator_gradient(s.t, s.x, s.y, s.z, u);
    const Vec pv = p;
    Mat coef = problem.drift_x(s.t, s.x, u).transpose();
    coef.diagonal().array() += g.fy;
    Vec acc = g.fx;
    for (int j = 0; j < d; ++j) {
      const Mat sxt = problem.diffusion_x(s.t, s.x, j).transpose();
      coef += g.fz[j] * sxt;
      const Vec qj = q.col(j);
      acc += g.fz[j] * qj + sxt * qj;
    }
    out = coef * pv + acc;
  };
  BackwardSolution sol =
      solve_backward(spec, terminal, noise, options, executor);
  return {std::move(sol.y), std::move(sol.z), std::move(sol.pathwise),
          std::move(sol.diagnostics)};
}

AdjointSecond solve_second_adjoint(const ControlProblem& problem,
                                   const StatePaths& base,
                                   const CostSolution& cost,
                                   const AdjointFirst& adj1,
                                   const PathBatch& noise,
                                   const RegressionOptions& options,
                                   const Executor& executor) {
  check_shape(base.x, noise, noise.grid.nodes(), "state paths");
  check_cost(cost, noise);
  check_adj1(adj1, noise);
  const TimeGrid& grid = noise.grid;
  const int n = problem.n();
  const int d = problem.d();
  Eigen::MatrixXd terminal(noise.paths, n * n);
  for (std::size_t path = 0; path < noise.paths; ++path) {
    const Mat hxx = problem.terminal_hessian(base.x.at(path, grid.steps()));
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r < n; ++r) terminal(path, c * n + r) = hxx(r, c);
    }
  }
  BackwardSpec spec;
  spec.width = static_cast<std::size_t>(n * n);
  spec.features = {&base.x};
  spec.driver = [&](std::size_t k, std::size_t path, BackwardSpec::CVec pv,
                    BackwardSpec::CMat qv, BackwardSpec::Out out) {
    const StatePoint s = state_point(base, cost, grid, path, k);
    const Vec u = base.u.at(path, k);
    const AdjointPoint a = adjoint_point(problem, adj1, nullptr, path, k);
    const GeneratorGradient g =
        problem.generator_gradient(s.t, s.x, s.y, s.z, u);
    const Mat P = Eigen::Map<const Eigen::MatrixXd>(pv.data(), n, n);

    const Mat bx = problem.drift_x(s.t, s.x, u);
    Mat lin = bx;
    std::vector<Mat> sx(d);
    for (int j = 0; j < d; ++j) {
      sx[j] = problem.diffusion_x(s.t, s.x, j);
      lin += g.fz[j] * sx[j];
    }
    Mat f = g.fy * P + lin.transpose() * P + P * lin +
            problem.drift_xx_weighted(s.t, s.x, u, a.p);
    JointMat bmat(n, n + 1 + d);
    bmat.leftCols(n).setIdentity();
    bmat.col(n) = a.p;
    for (int j = 0; j < d; ++j) {
      const Mat Qj =
          Eigen::Map<const Eigen::MatrixXd>(qv.data() + j * n * n, n, n);
      f += sx[j].transpose() * P * sx[j] + g.fz[j] * Qj +
           sx[j].transpose() * Qj + Qj * sx[j] +
           problem.diffusion_xx_weighted(s.t, s.x, j,
                                         g.fz[j] * a.p + a.q.col(j));
      bmat.col(n + 1 + j) = sx[j].transpose() * a.p + a.q.col(j);
    }
    const JointMat d2f = problem.generator_hessian(s.t, s.x, s.y, s.z, u);
    f += (bmat * d2f * bmat.transpose()).topLeftCorner(n, n);
    Eigen::Map<Eigen::MatrixXd>(out.data(), n, n) = f;
  };
  spec.project = [n](BackwardSpec::Out y) {
    Eigen::Map<Eigen::MatrixXd> P(y.data(), n, n);
    const Eigen::MatrixXd sym = 0.5 * (P + P.transpose());
    P = sym;
  };
  BackwardSolution sol =
      solve_backward(spec, terminal, noise, options, executor);
  return {std::move(sol.y), std::move(sol.z), std::move(sol.pathwise),
          std::move(sol.diagnostics)};
}

PathArray first_variation_source(const ControlProblem& problem,
                                 const StatePaths& base,
                                 const CostSolution& cost,
                                 const AdjointFirst& adj1,
                                 const PathArray& u_eps,
                                 const Executor& executor) {
  const std::size_t paths = base.x.paths();
  const std::size_t steps = base.u.nodes();
  if (!u_eps.same_shape(base.u)) {
    throw InvalidArgument("spiked controls do not match the base controls");
  }
  const TimeGrid grid(problem.horizon(), steps);
  PathArray source(paths, steps, 1);
  executor.for_each(paths, [&](std::size_t path) {
    for (std::size_t k = 0; k < steps; ++k) {
      const Vec ub = base.u.at(path, k);
      const Vec ue = u_eps.at(path, k);
      if (ue == ub) continue;
      const StatePoint s = state_point(base, cost, grid, path, k);
      const Vec p_next = adj1.p.at(path, k + 1);
      source(path, k) =
          p_next.dot(delta_b(problem, s, ue, ub)) +
          (problem.generator(s.t, s.x, s.y, s.z, ue) -
           problem.generator(s.t, s.x, s.y, s.z, ub));
    }
  });
  return source;
}

PathArray second_variation_source(const ControlProblem& problem,
                                  const StatePaths& base,
                                  const CostSolution& cost,
                                  const AdjointFirst& adj1,
                                  const AdjointSecond& adj2,
                                  const PathArray& u_eps, const PathArray& x1,
                                  const Executor& executor) {
  const std::size_t paths = base.x.paths();
  const std::size_t steps = base.u.nodes();
  if (!u_eps.same_shape(base.u) || !x1.same_shape(base.x)) {
    throw InvalidArgument("spike inputs do not match the base paths");
  }
  const TimeGrid grid(problem.horizon(), steps);
  const int n = problem.n();
  PathArray source(paths, steps, 1);
  executor.for_each(paths, [&](std::size_t path) {
    for (std::size_t k = 0; k < steps; ++k) {
      const Vec ub = base.u.at(path, k);
      const Vec ue = u_eps.at(path, k);
      if (ue == ub) continue;
      const StatePoint s = state_point(base, cost, grid, path, k);
      AdjointPoint a = adjoint_point(problem, adj1, nullptr, path, k);
      a.p = adj1.p.at(path, k + 1);
      const Mat P_next =
          Eigen::Map<const Eigen::MatrixXd>(adj2.P.row(path, k + 1), n, n);
      const Vec v1 = x1.at(path, k + 1);
      const Vec db = delta_b(problem, s, ue, ub);
      source(path, k) =
          (P_next * db).dot(v1) + delta_g(problem, s, ue, ub, a).dot(v1);
    }
  });
  return source;
}

VariationCost solve_variation_cost_first(const ControlProblem& problem,
                                         const StatePaths& base,
                                         const CostSolution& cost,
                                         const AdjointFirst& adj1,
                                         const PathArray& u_eps,
                                         const PathBatch& noise,
                                         const RegressionOptions& options,
                                         const Executor& executor) {
  check_shape(base.x, noise, noise.grid.nodes(), "state paths");
  check_cost(cost, noise);
  check_adj1(adj1, noise);
  check_shape(u_eps, noise, noise.grid.steps(), "spiked controls");
  const PathArray source =
      first_variation_source(problem, base, cost, adj1, u_eps, executor);
  const TimeGrid& grid = noise.grid;
  BackwardSpec spec;
  spec.width = 1;
  spec.features = {&base.x};
  spec.source = [&](std::size_t k, std::size_t path, BackwardSpec::Out out) {
    out[0] = source(path, k);
  };
  spec.driver = [&](std::size_t k, std::size_t path, BackwardSpec::CVec yhat,
                    BackwardSpec::CMat z, BackwardSpec::Out out) {
    const StatePoint s = state_point(base, cost, grid, path, k);
    const GeneratorGradient g = problem.generator_gradient(
        s.t, s.x, s.y, s.z, base.u.at(path, k));
    out[0] = g.fy * yhat[0] + g.fz.dot(Vec(z.row(0).transpose()));
  };
  return to_variation(solve_backward(
      spec, Eigen::MatrixXd::Zero(noise.paths, 1), noise, options, executor));
}

VariationCost solve_variation_cost_second(
    const ControlProblem& problem, const StatePaths& base,
    const CostSolution& cost, const AdjointFirst& adj1,
    const AdjointSecond& adj2, const PathArray& u_eps, const PathArray& x1,
    const PathBatch& noise, const RegressionOptions& options,
    const Executor& executor) {
  check_shape(base.x, noise, noise.grid.nodes(), "state paths");
  check_cost(cost, noise);
  check_adj1(adj1, noise);
  check_shape(adj2.P, noise, noise.grid.nodes(), "second adjoint");
  check_shape(u_eps, noise, noise.grid.steps(), "spiked controls");
  check_shape(x1, noise, noise.grid.nodes(), "first variation");
  const PathArray source = second_variation_source(
      problem, base, cost, adj1, adj2, u_eps, x1, executor);
  const TimeGrid& grid = noise.grid;
  BackwardSpec spec;
  spec.width = 1;
  spec.features = {&base.x, &x1};
  spec.source = [&](std::size_t k, std::size_t path, BackwardSpec::Out out) {
    out[0] = source(path, k);
  };
  spec.driver = [&](std::size_t k, std::size_t path, BackwardSpec::CVec yhat,
                    BackwardSpec::CMat z, BackwardSpec::Out out) {
    const StatePoint s = state_point(base, cost, grid, path, k);
    const GeneratorGradient g = problem.generator_gradient(
        s.t, s.x, s.y, s.z, base.u.at(path, k));
    out[0] = g.fy * yhat[0] + g.fz.dot(Vec(z.row(0).transpose()));
  };
  return to_variation(solve_backward(
      spec, Eigen::MatrixXd::Zero(noise.paths, 1), noise, options, executor));
}

Estimate gamma_duality_y1(const ControlProblem& problem,
                          const StatePaths& base, const CostSolution& cost,
                          const AdjointFirst& adj1, const PathArray& u_eps,
                          const PathArray& gamma, const PathBatch& noise,
                          const Executor& executor) {
  check_shape(gamma, noise, noise.grid.nodes(), "gamma paths");
  check_cost(cost, noise);
  check_adj1(adj1, noise);
  check_shape(u_eps, noise, noise.grid.steps(), "spiked controls");
  const PathArray source =
      first_variation_source(problem, base, cost, adj1, u_eps, executor);
  return gamma_weighted(source, gamma, noise, executor);
}

Estimate gamma_duality_y2(const ControlProblem& problem,
                          const StatePaths& base, const CostSolution& cost,
                          const AdjointFirst& adj1, const AdjointSecond& adj2,
                          const PathArray& u_eps, const PathArray& x1,
                          const PathArray& gamma, const PathBatch& noise,
                          const Executor& executor) {
  check_shape(gamma, noise, noise.grid.nodes(), "gamma paths");
  check_cost(cost, noise);
  check_adj1(adj1, noise);
  check_shape(u_eps, noise, noise.grid.steps(), "spiked controls");
  const PathArray source = second_variation_source(
      problem, base, cost, adj1, adj2, u_eps, x1, executor);
  return gamma_weighted(source, gamma, noise, executor);
}

StabilityReport bsde_stability_check(const ControlProblem& problem,
                                     const StatePaths& states,
                                     const PathBatch& noise,
                                     const std::vector<double>& deltas,
                                     const RegressionOptions& options,
                                     const Executor& executor) {
  const std::size_t paths = noise.paths;
  const std::size_t steps = noise.grid.steps();
  const double h = noise.grid.step_size();
  const int d = problem.d();
  Eigen::MatrixXd terminal(paths, 1);
  Eigen::VectorXd xi(paths);
  const NormalStream stream(noise.seed, kStabilityDomain);
  for (std::size_t path = 0; path < paths; ++path) {
    terminal(path, 0) = problem.terminal_cost(states.x.at(path, steps));
    xi[path] = 2.0 * stream.uniforms(path, 0)[0] - 1.0;
  }
  const CostSolution base = solve_cost_bsde_terminal(
      problem, states, terminal, noise, options, executor);

  StabilityReport report;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double delta : deltas) {
    if (!(delta >= 0.0) || !std::isfinite(delta)) {
      throw InvalidArgument("stability perturbation must be >= 0");
    }
    StabilityLevel level;
    level.delta = delta;
    const Eigen::MatrixXd bumped = terminal + delta * xi;
    const CostSolution pert = solve_cost_bsde_terminal(
        problem, states, bumped, noise, options, executor);
    double sup_sum = 0.0;
    double z_sum = 0.0;
    std::vector<double> node_sq(steps + 1, 0.0);
    for (std::size_t path = 0; path < paths; ++path) {
      double sup = 0.0;
      for (std::size_t k = 0; k <= steps; ++k) {
        const double dy = pert.y(path, k) - base.y(path, k);
        sup = std::max(sup, dy * dy);
        node_sq[k] += dy * dy;
      }
      sup_sum += sup;
      for (std::size_t k = 0; k < steps; ++k) {
        for (int j = 0; j < d; ++j) {
          const double dz = pert.z(path, k, j) - base.z(path, k, j);
          z_sum += dz * dz * h;
        }
      }
    }
    const double count = static_cast<double>(paths);
    level.perturbation_norm = delta * std::sqrt(xi.squaredNorm() / count);
    level.difference_norm = std::sqrt((sup_sum + z_sum) / count);
    if (level.perturbation_norm == 0.0) {
      level.zero_difference = level.difference_norm == 0.0;
      level.ratio = 0.0;
      level.pointwise_ratio = 0.0;
      if (!level.zero_difference) report.pass = false;
    } else {
      level.ratio = level.difference_norm / level.perturbation_norm;
      double worst = 0.0;
      for (double sq : node_sq) worst = std::max(worst, sq);
      level.pointwise_ratio = std::sqrt(worst / node_sq[steps]);
      lo = std::min(lo, level.ratio);
      hi = std::max(hi, level.ratio);
    }
    report.levels.push_back(level);
  }
  if (hi > 0.0) {
    report.spread = hi / lo;
    if (report.spread > 2.0) report.pass = false;
  }
  return report;
}

void write_diagnostics_jsonl(std::ostream& out, const std::string& solver,
                             const std::vector<StepDiagnostics>& diagnostics) {
  for (const StepDiagnostics& d : diagnostics) {
    const nlohmann::json line = {{"solver", solver},
                                 {"step", d.step},
                                 {"basis", d.basis_size},
                                 {"features", d.active_features},
                                 {"condition", d.condition},
                                 {"residual_rms", d.residual_rms}};
    out << line.dump() << '\n';
  }
}

}  // namespace rsmp
