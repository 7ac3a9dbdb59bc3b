#include "rsmp/sde.hpp"

#include <cmath>
#include <iomanip>

#include "rsmp/errors.hpp"

namespace rsmp {
namespace {

void check_noise(const ControlProblem& problem, const PathBatch& noise) {
  if (noise.noise_dim != problem.d()) {
    throw InvalidArgument("Brownian batch dimension differs from the problem");
  }
}

void check_controls(const ControlProblem& problem, const PathArray& u,
                    const PathBatch& noise) {
  if (u.paths() != noise.paths || u.nodes() != noise.grid.steps() ||
      static_cast<int>(u.width()) != problem.m()) {
    throw InvalidArgument("control array does not match the batch");
  }
}

void check_base(const ControlProblem& problem, const StatePaths& base,
                const PathBatch& noise) {
  if (base.x.paths() != noise.paths || base.x.nodes() != noise.grid.nodes() ||
      static_cast<int>(base.x.width()) != problem.n()) {
    throw InvalidArgument("state paths do not match the batch");
  }
  check_controls(problem, base.u, noise);
}

template <typename V>
void check_finite(const V& v, const char* what, std::size_t path,
                  std::size_t step) {
  if (!v.allFinite()) {
    throw IntegrationBlowup(std::string("non-finite ") + what + " on path " +
                                std::to_string(path) + " at step " +
                                std::to_string(step),
                            path, step);
  }
}

Vec noise_at(const PathBatch& noise, std::size_t path, std::size_t k) {
  return noise.increments.at(path, k);
}

}  // namespace

PathArray realize_controls(const ControlProblem& problem,
                           const ControlProcess& u, const TimeGrid& grid,
                           const PathArray& state, const Executor& executor) {
  if (u.dim() != problem.m()) {
    throw InvalidArgument("control dimension differs from the problem");
  }
  u.check_steps(grid.steps());
  u.check_in(problem.control_set());
  if (state.nodes() < grid.steps()) {
    throw InvalidArgument("state paths shorter than the grid");
  }
  PathArray out(state.paths(), grid.steps(), problem.m());
  const bool feedback = u.needs_state();
  executor.for_each(state.paths(), [&](std::size_t path) {
    for (std::size_t k = 0; k < grid.steps(); ++k) {
      const Vec x = state.at(path, k);
      const Vec v = u.value(k, grid.time(k), x);
      if (feedback && !problem.control_set().contains(v, 1e-9)) {
        throw InvalidArgument("feedback control leaves the control set on "
                              "path " + std::to_string(path) + " at step " +
                              std::to_string(k));
      }
      out.at(path, k) = v;
    }
  });
  return out;
}

StatePaths euler_forward(const ControlProblem& problem, const ControlProcess& u,
                         const PathBatch& noise, const Executor& executor) {
  check_noise(problem, noise);
  if (u.dim() != problem.m()) {
    throw InvalidArgument("control dimension differs from the problem");
  }
  u.check_steps(noise.grid.steps());
  u.check_in(problem.control_set());
  if (!u.needs_state()) {
    PathArray dummy(noise.paths, noise.grid.steps(), problem.n());
    PathArray realized =
        realize_controls(problem, u, noise.grid, dummy, executor);
    return euler_forward(problem, realized, noise, executor);
  }

  const TimeGrid& grid = noise.grid;
  const double h = grid.step_size();
  StatePaths out{PathArray(noise.paths, grid.nodes(), problem.n()),
                 PathArray(noise.paths, grid.steps(), problem.m())};
  executor.for_each(noise.paths, [&](std::size_t path) {
    Vec x = problem.initial_state();
    out.x.at(path, 0) = x;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
      const double t = grid.time(k);
      const Vec v = u.value(k, t, x);
      if (!problem.control_set().contains(v, 1e-9)) {
        throw InvalidArgument("feedback control leaves the control set on "
                              "path " + std::to_string(path) + " at step " +
                              std::to_string(k));
      }
      out.u.at(path, k) = v;
      x += problem.drift(t, x, v) * h +
           problem.diffusion(t, x) * noise_at(noise, path, k);
      check_finite(x, "state", path, k + 1);
      out.x.at(path, k + 1) = x;
    }
  });
  return out;
}

StatePaths euler_forward(const ControlProblem& problem, const PathArray& u,
                         const PathBatch& noise, const Executor& executor) {
  check_noise(problem, noise);
  check_controls(problem, u, noise);
  const TimeGrid& grid = noise.grid;
  const double h = grid.step_size();
  StatePaths out{PathArray(noise.paths, grid.nodes(), problem.n()), u};
  executor.for_each(noise.paths, [&](std::size_t path) {
    Vec x = problem.initial_state();
    out.x.at(path, 0) = x;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
      const double t = grid.time(k);
      const Vec v = u.at(path, k);
      x += problem.drift(t, x, v) * h +
           problem.diffusion(t, x) * noise_at(noise, path, k);
      check_finite(x, "state", path, k + 1);
      out.x.at(path, k + 1) = x;
    }
  });
  return out;
}

PathArray integrate_variation_first(const ControlProblem& problem,
                                    const StatePaths& base,
                                    const PathArray& u_eps,
                                    const PathBatch& noise,
                                    const Executor& executor) {
  check_noise(problem, noise);
  check_base(problem, base, noise);
  check_controls(problem, u_eps, noise);
  const TimeGrid& grid = noise.grid;
  const double h = grid.step_size();
  const int n = problem.n();
  PathArray x1(noise.paths, grid.nodes(), n);
  executor.for_each(noise.paths, [&](std::size_t path) {
    Vec v1 = Vec::Zero(n);
    for (std::size_t k = 0; k < grid.steps(); ++k) {
      const double t = grid.time(k);
      const Vec x = base.x.at(path, k);
      const Vec ub = base.u.at(path, k);
      const Vec ue = u_eps.at(path, k);
      const Vec dw = noise_at(noise, path, k);
      Vec next = v1 + problem.drift_x(t, x, ub) * v1 * h;
      if (ue != ub) {
        next += (problem.drift(t, x, ue) - problem.drift(t, x, ub)) * h;
      }
      for (int j = 0; j < problem.d(); ++j) {
        next += problem.diffusion_x(t, x, j) * v1 * dw[j];
      }
      v1 = next;
      check_finite(v1, "first variation", path, k + 1);
      x1.at(path, k + 1) = v1;
    }
  });
  return x1;
}

PathArray integrate_variation_second(const ControlProblem& problem,
                                     const StatePaths& base,
                                     const PathArray& u_eps,
                                     const PathArray& x1,
                                     const PathBatch& noise,
                                     const Executor& executor) {
  check_noise(problem, noise);
  check_base(problem, base, noise);
  check_controls(problem, u_eps, noise);
  if (!x1.same_shape(base.x)) {
    throw InvalidArgument("first variation does not match the state paths");
  }
  const TimeGrid& grid = noise.grid;
  const double h = grid.step_size();
  const int n = problem.n();
  PathArray x2(noise.paths, grid.nodes(), n);
  executor.for_each(noise.paths, [&](std::size_t path) {
    Vec v2 = Vec::Zero(n);
    for (std::size_t k = 0; k < grid.steps(); ++k) {
      const double t = grid.time(k);
      const Vec x = base.x.at(path, k);
      const Vec ub = base.u.at(path, k);
      const Vec ue = u_eps.at(path, k);
      const Vec v1 = x1.at(path, k);
      const Vec dw = noise_at(noise, path, k);

      Vec drift = problem.drift_x(t, x, ub) * v2;
      if (ue != ub) {
        drift += (problem.drift_x(t, x, ue) - problem.drift_x(t, x, ub)) * v1;
      }
      Vec quad(n);
      for (int i = 0; i < n; ++i) {
        quad[i] = v1.dot(problem.drift_xx_weighted(t, x, ub, Vec::Unit(n, i)) *
                         v1);
      }
      drift += 0.5 * quad;

      Vec next = v2 + drift * h;
      for (int j = 0; j < problem.d(); ++j) {
        Vec vol = problem.diffusion_x(t, x, j) * v2;
        for (int i = 0; i < n; ++i) {
          vol[i] += 0.5 * v1.dot(problem.diffusion_xx_weighted(
                                     t, x, j, Vec::Unit(n, i)) *
                                 v1);
        }
        next += vol * dw[j];
      }
      v2 = next;
      check_finite(v2, "second variation", path, k + 1);
      x2.at(path, k + 1) = v2;
    }
  });
  return x2;
}

VariationPaths integrate_variations(const ControlProblem& problem,
                                    const StatePaths& base,
                                    const PathArray& u_eps,
                                    const PathBatch& noise,
                                    const Executor& executor) {
  PathArray x1 =
      integrate_variation_first(problem, base, u_eps, noise, executor);
  PathArray x2 =
      integrate_variation_second(problem, base, u_eps, x1, noise, executor);
  return {std::move(x1), std::move(x2)};
}

PathArray integrate_gamma(const ControlProblem& problem, const StatePaths& base,
                          const PathArray& y, const PathArray& z,
                          const PathBatch& noise, const Executor& executor) {
  check_noise(problem, noise);
  check_base(problem, base, noise);
  const TimeGrid& grid = noise.grid;
  if (y.paths() != noise.paths || y.nodes() != grid.nodes() ||
      z.paths() != noise.paths || z.nodes() != grid.steps() ||
      static_cast<int>(z.width()) != problem.d()) {
    throw InvalidArgument("cost solution does not match the batch");
  }
  const double h = grid.step_size();
  PathArray gamma(noise.paths, grid.nodes(), 1, 1.0);
  executor.for_each(noise.paths, [&](std::size_t path) {
    double log_gamma = 0.0;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
      const double t = grid.time(k);
      const GeneratorGradient g = problem.generator_gradient(
          t, base.x.at(path, k), y(path, k), z.at(path, k),
          base.u.at(path, k));
      log_gamma += (g.fy - 0.5 * g.fz.squaredNorm()) * h +
                   g.fz.dot(noise_at(noise, path, k));
      if (!std::isfinite(log_gamma)) {
        throw InvalidProblem("non-finite generator derivative along path " +
                             std::to_string(path) + " at step " +
                             std::to_string(k));
      }
      gamma(path, k + 1) = std::exp(log_gamma);
    }
  });
  return gamma;
}

void write_path_dump(std::ostream& out, const PathBatch& noise,
                     const StatePaths& states, std::size_t max_paths) {
  const PathArray w = brownian_levels(noise);
  out << "path step t";
  for (int j = 0; j < noise.noise_dim; ++j) out << " W" << j;
  for (std::size_t i = 0; i < states.x.width(); ++i) out << " x" << i;
  out << "\n" << std::setprecision(17);
  const std::size_t paths = std::min(max_paths, noise.paths);
  for (std::size_t path = 0; path < paths; ++path) {
    for (std::size_t k = 0; k < noise.grid.nodes(); ++k) {
      out << path << ' ' << k << ' ' << noise.grid.time(k);
      for (int j = 0; j < noise.noise_dim; ++j) out << ' ' << w(path, k, j);
      for (std::size_t i = 0; i < states.x.width(); ++i) {
        out << ' ' << states.x(path, k, i);
      }
      out << '\n';
    }
  }
}

}  // namespace rsmp
