#include "rsmp/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "rsmp/errors.hpp"

namespace rsmp {

Example1Oracle::Point Example1Oracle::eval(double t, double w,
                                           double u) const {
  const double theta = u * t + a * w;
  const double e = std::exp(beta * (horizon - t));
  Point out;
  out.x = Vec(2);
  out.x << std::cos(theta), std::sin(theta);
  out.p = e * out.x;
  out.q = Vec(2);
  out.q << -a * e * std::sin(theta), a * e * std::cos(theta);
  out.P = e * Mat::Identity(2, 2);
  out.y = 0.5 * e;
  return out;
}

double Example1Oracle::delta_g_db(double t, double v, double u) const {
  return -std::exp(beta * (horizon - t)) * (v - u) * (v - u);
}

double Example1Oracle::db_P_db(double t, double v, double u) const {
  return std::exp(beta * (horizon - t)) * (v - u) * (v - u);
}

Example1Paths example1_paths(const Example1Oracle& oracle,
                             const PathBatch& noise, double u) {
  if (noise.noise_dim != 1) {
    throw InvalidArgument("example1 oracle needs scalar noise");
  }
  const PathArray w = brownian_levels(noise);
  const std::size_t nodes = noise.grid.nodes();
  Example1Paths out{PathArray(noise.paths, nodes, 2),
                    PathArray(noise.paths, nodes, 2),
                    PathArray(noise.paths, nodes - 1, 2),
                    PathArray(noise.paths, nodes, 4)};
  for (std::size_t path = 0; path < noise.paths; ++path) {
    for (std::size_t k = 0; k < nodes; ++k) {
      const auto pt = oracle.eval(noise.grid.time(k), w(path, k, 0), u);
      out.x.at(path, k) = pt.x;
      out.p.at(path, k) = pt.p;
      if (k + 1 < nodes) out.q.at(path, k) = pt.q;
      out.P.at(path, k) = pt.P.reshaped();
    }
  }
  return out;
}

double example2_P(int sign, double f_y, double f_z, double t, double horizon,
                  double terminal) {
  if (sign != 1 && sign != -1) {
    throw InvalidArgument("example2 sign must be +1 or -1");
  }
  return sign * terminal * std::exp((f_y + 2.0 * f_z + 1.0) * (horizon - t));
}

FieldDiff oracle_diff(const std::string& field, const PathArray& numerical,
                      const PathArray& oracle) {
  if (!numerical.same_shape(oracle)) {
    throw InvalidArgument("oracle shape mismatch for field '" + field + "'");
  }
  return oracle_diff(field, numerical, oracle, oracle.nodes());
}

FieldDiff oracle_diff(const std::string& field, const PathArray& numerical,
                      const PathArray& oracle, std::size_t nodes) {
  if (numerical.paths() != oracle.paths() ||
      numerical.width() != oracle.width() || nodes > numerical.nodes() ||
      nodes > oracle.nodes() || nodes == 0 || oracle.paths() == 0) {
    throw InvalidArgument("oracle shape mismatch for field '" + field + "'");
  }
  const std::size_t paths = oracle.paths();
  FieldDiff out;
  out.field = field;
  std::vector<double> per_node(nodes, 0.0);
  double total = 0.0;
  double scale = 0.0;
  double sup_sum = 0.0;
  for (std::size_t path = 0; path < paths; ++path) {
    double sup = 0.0;
    for (std::size_t k = 0; k < nodes; ++k) {
      const auto diff = numerical.at(path, k) - oracle.at(path, k);
      const double e2 = diff.squaredNorm();
      per_node[k] += e2;
      total += e2;
      scale += oracle.at(path, k).squaredNorm();
      sup = std::max(sup, e2);
      out.max_abs = std::max(out.max_abs, diff.cwiseAbs().maxCoeff());
    }
    sup_sum += sup;
  }
  const double count = static_cast<double>(paths);
  for (double v : per_node) {
    out.sup_node_rms = std::max(out.sup_node_rms, std::sqrt(v / count));
  }
  out.rms = std::sqrt(total / (count * static_cast<double>(nodes)));
  out.relative_rms = scale > 0.0 ? std::sqrt(total / scale) : out.rms;
  out.mean_sup_squared = sup_sum / count;
  return out;
}

}  // namespace rsmp
