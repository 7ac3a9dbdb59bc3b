#pragma once

#include <string>
#include <vector>

#include "rsmp/brownian.hpp"
#include "rsmp/path_array.hpp"
#include "rsmp/types.hpp"

namespace rsmp {

/// Closed forms for the rotating-state example: with theta = u t + a W,
///   x = (cos theta, sin theta),  p = e^{beta(T-t)} x,
///   q = e^{beta(T-t)} a (-sin theta, cos theta),  P = e^{beta(T-t)} I,
///   Q = 0,  y = e^{beta(T-t)} / 2,  z = 0.
struct Example1Oracle {
  double a = 1.0;
  double beta = 0.0;
  double gamma = 0.0;
  double horizon = 1.0;

  struct Point {
    Vec x;
    Vec p;
    Vec q;
    Mat P;
    double y = 0.0;
  };

  Point eval(double t, double w, double u) const;
  /// dG(t;v).db(t;v) at unit |x|.
  double delta_g_db(double t, double v, double u) const;
  /// db(t;v)' P(t) db(t;v) at unit |x|.
  double db_P_db(double t, double v, double u) const;
};

/// Closed-form fields of Example1Oracle on a batch for a constant control u.
struct Example1Paths {
  PathArray x;  // M x (N+1) x 2
  PathArray p;  // M x (N+1) x 2
  PathArray q;  // M x N x 2, on the left node of each step
  PathArray P;  // M x (N+1) x 4, column-major
};

Example1Paths example1_paths(const Example1Oracle& oracle,
                             const PathBatch& noise, double u);

/// s * terminal * exp((f_y + 2 f_z + 1)(T - t)), the solution of
/// dP = -(f_y + 2 f_z + 1) P dt with P(T) = s * terminal.
double example2_P(int sign, double f_y, double f_z, double t,
                  double horizon = 1.0, double terminal = 0.5);

/// Discrepancy statistics between a numerical field and its oracle.
struct FieldDiff {
  std::string field;
  /// max over nodes of sqrt(mean over paths |num - oracle|^2).
  double sup_node_rms = 0.0;
  /// sqrt(mean over paths and nodes |num - oracle|^2).
  double rms = 0.0;
  /// rms / sqrt(mean |oracle|^2); equals rms when the oracle vanishes.
  double relative_rms = 0.0;
  /// mean over paths of max over nodes |num - oracle|^2.
  double mean_sup_squared = 0.0;
  double max_abs = 0.0;
};

/// Throws InvalidArgument on a shape mismatch. When the numerical field has
/// more nodes than the oracle (or vice versa) the comparison is refused.
FieldDiff oracle_diff(const std::string& field, const PathArray& numerical,
                      const PathArray& oracle);

/// Same, over the first `nodes` nodes of both arrays.
FieldDiff oracle_diff(const std::string& field, const PathArray& numerical,
                      const PathArray& oracle, std::size_t nodes);

}  // namespace rsmp
