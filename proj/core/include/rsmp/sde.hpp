#pragma once

#include <cstddef>
#include <ostream>

#include "rsmp/brownian.hpp"
#include "rsmp/control.hpp"
#include "rsmp/executor.hpp"
#include "rsmp/path_array.hpp"
#include "rsmp/problem.hpp"

namespace rsmp {

/// Simulated state paths of one control on one Brownian batch, with the
/// control values actually applied on each step.
struct StatePaths {
  PathArray x;  // M x (N+1) x n
  PathArray u;  // M x N x m
};

/// First and second order state variations.
struct VariationPaths {
  PathArray x1;  // M x (N+1) x n
  PathArray x2;  // M x (N+1) x n
};

/// Evaluates u on every step along the given state paths (M x N x m).
/// Feedback values outside the control set raise InvalidArgument.
PathArray realize_controls(const ControlProblem& problem,
                           const ControlProcess& u, const TimeGrid& grid,
                           const PathArray& state,
                           const Executor& executor = Executor());

/// Euler-Maruyama: x_{k+1} = x_k + b(t_k, x_k, u_k) h + sigma(t_k, x_k) dW_k.
/// Throws IntegrationBlowup on a non-finite state.
StatePaths euler_forward(const ControlProblem& problem, const ControlProcess& u,
                         const PathBatch& noise,
                         const Executor& executor = Executor());

/// Same scheme with pre-realized controls (M x N x m).
StatePaths euler_forward(const ControlProblem& problem, const PathArray& u,
                         const PathBatch& noise,
                         const Executor& executor = Executor());

/// dx1 = (b_x x1 + db) dt + sum_j sigma^j_x x1 dW^j, x1(0) = 0, where
/// db = b(t, xbar, u_eps) - b(t, xbar, ubar) and u_eps is realized along
/// xbar.
PathArray integrate_variation_first(const ControlProblem& problem,
                                    const StatePaths& base,
                                    const PathArray& u_eps,
                                    const PathBatch& noise,
                                    const Executor& executor = Executor());

/// dx2 = (b_x x2 + db_x x1 + b_xx(x1,x1)/2) dt
///     + sum_j (sigma^j_x x2 + sigma^j_xx(x1,x1)/2) dW^j, x2(0) = 0.
PathArray integrate_variation_second(const ControlProblem& problem,
                                     const StatePaths& base,
                                     const PathArray& u_eps,
                                     const PathArray& x1,
                                     const PathBatch& noise,
                                     const Executor& executor = Executor());

VariationPaths integrate_variations(const ControlProblem& problem,
                                    const StatePaths& base,
                                    const PathArray& u_eps,
                                    const PathBatch& noise,
                                    const Executor& executor = Executor());

/// gamma_{k+1} = gamma_k exp((f_y - |f_z|^2/2) h + f_z . dW_k), gamma_0 = 1,
/// with f_y, f_z evaluated at (t_k, xbar_k, ybar_k, zbar_k, ubar_k).
/// y is M x (N+1) x 1 and z is M x N x d.
PathArray integrate_gamma(const ControlProblem& problem, const StatePaths& base,
                          const PathArray& y, const PathArray& z,
                          const PathBatch& noise,
                          const Executor& executor = Executor());

/// One whitespace-separated row per (path, node): path k t W... x...
void write_path_dump(std::ostream& out, const PathBatch& noise,
                     const StatePaths& states, std::size_t max_paths);

}  // namespace rsmp
