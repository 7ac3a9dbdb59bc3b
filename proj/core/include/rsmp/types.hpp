#pragma once

#include <cstddef>

#include <Eigen/Core>

namespace rsmp {

/// Upper bound on state, noise and control dimensions. Small fixed-capacity
/// Eigen types keep per-path coefficient evaluations off the heap.
inline constexpr int kMaxDim = 8;
/// Capacity for the (x, y, z) block of the generator Hessian: n + 1 + d.
inline constexpr int kMaxJointDim = 2 * kMaxDim + 1;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim,
                          kMaxDim>;
using JointVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxJointDim, 1>;
using JointMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0,
                               kMaxJointDim, kMaxJointDim>;

struct Dimensions {
  int state = 1;    // n
  int noise = 1;    // d
  int control = 1;  // m

  int joint() const { return state + 1 + noise; }
  friend bool operator==(const Dimensions&, const Dimensions&) = default;
};

}  // namespace rsmp
