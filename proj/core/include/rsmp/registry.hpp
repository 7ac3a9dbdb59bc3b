#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsmp/problem.hpp"

namespace rsmp {

/// Coefficients of the affine family
///   b = A x + B u + c,        sigma^j = C_j x + D_j,
///   f = alpha y + beta.z + x'R x / 2 + r.x + u'K u / 2 + k.u,
///   h = x'H x / 2 + g.x.
struct AffineSpec {
  Eigen::MatrixXd A;               // n x n
  Eigen::MatrixXd B;               // n x m
  Eigen::VectorXd c;               // n
  std::vector<Eigen::MatrixXd> C;  // d of n x n
  Eigen::MatrixXd D;               // n x d, column j is D_j
  double alpha = 0.0;
  Eigen::VectorXd beta;            // d
  Eigen::MatrixXd R;               // n x n symmetric
  Eigen::VectorXd r;               // n
  Eigen::MatrixXd K;               // m x m symmetric
  Eigen::VectorXd k;               // m
  Eigen::MatrixXd H;               // n x n symmetric
  Eigen::VectorXd g;               // n
  Eigen::VectorXd x0;              // n
  double horizon = 1.0;
  /// Box [lower, upper] with `grid_points` per axis unless `points` is set.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  int grid_points = 21;
  std::vector<Eigen::VectorXd> points;
  /// Non-positive means derive a bound from the coefficients.
  double lipschitz_bound = 0.0;

  /// All-zero coefficients of the given shape with U = [-1,1]^m.
  static AffineSpec zeros(int n, int d, int m);
};

/// Names accepted by build_registry_problem.
std::vector<std::string> registry_names();

/// Builds "example1" (parameters a, beta, gamma, T, grid_points, K0),
/// "example2" (sign, alpha, beta, T, K0) or "affine" (see parse_affine_spec).
/// Unknown names, unknown keys and out-of-range values throw
/// InvalidArgument.
ProblemPtr build_registry_problem(const std::string& name,
                                  const nlohmann::json& params);

ProblemPtr make_example1(double a, double beta, double gamma,
                         double horizon = 1.0, int grid_points = 21,
                         double lipschitz_bound = 0.0);
ProblemPtr make_example2(int sign, double alpha = 0.0, double beta = 0.0,
                         double horizon = 1.0, double lipschitz_bound = 0.0);
ProblemPtr make_affine_problem(const AffineSpec& spec);

/// Reads an affine spec from registry parameters. Matrices accept nested
/// arrays or a scalar (s*I when square, constant fill otherwise).
AffineSpec parse_affine_spec(const nlohmann::json& params);
nlohmann::json affine_spec_to_json(const AffineSpec& spec);

/// A well-conditioned random affine instance, deterministic in the seed.
AffineSpec random_affine_spec(std::uint64_t seed, int n, int d, int m);

}  // namespace rsmp
