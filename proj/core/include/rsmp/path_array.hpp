#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace rsmp {

/// Dense (path, node, component) array stored path-major. Used for every
/// per-path process: Brownian increments, states, controls, BSDE solutions.
class PathArray {
 public:
  PathArray() = default;
  PathArray(std::size_t paths, std::size_t nodes, std::size_t width,
            double fill = 0.0);

  std::size_t paths() const { return paths_; }
  std::size_t nodes() const { return nodes_; }
  std::size_t width() const { return width_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t path, std::size_t node, std::size_t c = 0) {
    return data_[index(path, node, c)];
  }
  double operator()(std::size_t path, std::size_t node,
                    std::size_t c = 0) const {
    return data_[index(path, node, c)];
  }

  Eigen::Map<Eigen::VectorXd> at(std::size_t path, std::size_t node) {
    return {data_.data() + index(path, node, 0),
            static_cast<Eigen::Index>(width_)};
  }
  Eigen::Map<const Eigen::VectorXd> at(std::size_t path,
                                       std::size_t node) const {
    return {data_.data() + index(path, node, 0),
            static_cast<Eigen::Index>(width_)};
  }

  /// Pointer to the first component at (path, node).
  const double* row(std::size_t path, std::size_t node) const {
    return data_.data() + index(path, node, 0);
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const PathArray& other) const {
    return paths_ == other.paths_ && nodes_ == other.nodes_ &&
           width_ == other.width_;
  }

  friend bool operator==(const PathArray&, const PathArray&) = default;

 private:
  std::size_t index(std::size_t path, std::size_t node, std::size_t c) const {
    return (path * nodes_ + node) * width_ + c;
  }

  std::size_t paths_ = 0;
  std::size_t nodes_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Uniform time grid t_k = k T / N.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps);

  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  std::size_t nodes() const { return steps_ + 1; }
  double step_size() const { return horizon_ / static_cast<double>(steps_); }
  double time(std::size_t node) const {
    return horizon_ * static_cast<double>(node) / static_cast<double>(steps_);
  }

  /// Node index closest to t; throws if t is farther than `slack` steps
  /// from a node.
  std::size_t node_at(double t, double slack = 1e-9) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double horizon_;
  std::size_t steps_;
};

}  // namespace rsmp
