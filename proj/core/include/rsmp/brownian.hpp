#pragma once

#include <cstddef>
#include <cstdint>

#include "rsmp/executor.hpp"
#include "rsmp/path_array.hpp"

namespace rsmp {

/// Seeded Brownian increments on a uniform grid. increments(path, k, j) is
/// W^j(t_{k+1}) - W^j(t_k). Every simulated process on one batch consumes
/// these same increments (common random numbers).
struct PathBatch {
  TimeGrid grid;
  std::size_t paths = 0;
  int noise_dim = 1;
  std::uint64_t seed = 0;
  PathArray increments;  // M x N x d
};

/// Gaussian increments with variance h. Each draw is a pure function of
/// (seed, path, step, component), so batches are identical for every worker
/// count and every execution order.
PathBatch sample_brownian(const TimeGrid& grid, std::size_t paths,
                          int noise_dim, std::uint64_t seed,
                          const Executor& executor = Executor());

/// Same Brownian paths on a grid `factor` times coarser (increments summed).
PathBatch coarsen(const PathBatch& batch, std::size_t factor);

/// Paths [begin, end) of a batch.
PathBatch slice(const PathBatch& batch, std::size_t begin, std::size_t end);

/// W(t_k) for k = 0..N, as an M x (N+1) x d array.
PathArray brownian_levels(const PathBatch& batch);

}  // namespace rsmp
