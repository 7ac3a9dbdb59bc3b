#include "rsmp/brownian.hpp"

#include <cmath>

#include "rsmp/errors.hpp"
#include "rsmp/random.hpp"

namespace rsmp {

PathBatch sample_brownian(const TimeGrid& grid, std::size_t paths,
                          int noise_dim, std::uint64_t seed,
                          const Executor& executor) {
  if (paths < 1) throw InvalidArgument("path count must be >= 1");
  if (noise_dim < 1 || noise_dim > 8) {
    throw InvalidArgument("noise dimension must be in [1, 8]");
  }
  if (grid.steps() > (1u << 29)) {
    throw InvalidArgument("too many time steps for the counter layout");
  }
  PathBatch batch{grid, paths, noise_dim, seed,
                  PathArray(paths, grid.steps(), noise_dim)};
  const NormalStream stream(seed);
  const double scale = std::sqrt(grid.step_size());
  const int pairs = (noise_dim + 1) / 2;
  executor.for_each(paths, [&](std::size_t path) {
    for (std::size_t k = 0; k < grid.steps(); ++k) {
      for (int block = 0; block < pairs; ++block) {
        const auto z = stream.pair(
            path, static_cast<std::uint32_t>(k * 4 + block));
        for (int c = 0; c < 2 && 2 * block + c < noise_dim; ++c) {
          batch.increments(path, k, 2 * block + c) = scale * z[c];
        }
      }
    }
  });
  return batch;
}

PathBatch coarsen(const PathBatch& batch, std::size_t factor) {
  if (factor < 1 || batch.grid.steps() % factor != 0) {
    throw InvalidArgument("coarsening factor must divide the step count");
  }
  const std::size_t steps = batch.grid.steps() / factor;
  PathBatch out{TimeGrid(batch.grid.horizon(), steps), batch.paths,
                batch.noise_dim, batch.seed,
                PathArray(batch.paths, steps, batch.noise_dim)};
  for (std::size_t path = 0; path < batch.paths; ++path) {
    for (std::size_t k = 0; k < steps; ++k) {
      for (int j = 0; j < batch.noise_dim; ++j) {
        double sum = 0.0;
        for (std::size_t s = 0; s < factor; ++s) {
          sum += batch.increments(path, k * factor + s, j);
        }
        out.increments(path, k, j) = sum;
      }
    }
  }
  return out;
}

PathBatch slice(const PathBatch& batch, std::size_t begin, std::size_t end) {
  if (begin >= end || end > batch.paths) {
    throw InvalidArgument("path slice out of range");
  }
  PathBatch out{batch.grid, end - begin, batch.noise_dim, batch.seed,
                PathArray(end - begin, batch.grid.steps(), batch.noise_dim)};
  for (std::size_t path = begin; path < end; ++path) {
    for (std::size_t k = 0; k < batch.grid.steps(); ++k) {
      for (int j = 0; j < batch.noise_dim; ++j) {
        out.increments(path - begin, k, j) = batch.increments(path, k, j);
      }
    }
  }
  return out;
}

PathArray brownian_levels(const PathBatch& batch) {
  PathArray out(batch.paths, batch.grid.nodes(), batch.noise_dim);
  for (std::size_t path = 0; path < batch.paths; ++path) {
    for (std::size_t k = 0; k < batch.grid.steps(); ++k) {
      for (int j = 0; j < batch.noise_dim; ++j) {
        out(path, k + 1, j) = out(path, k, j) + batch.increments(path, k, j);
      }
    }
  }
  return out;
}

}  // namespace rsmp
