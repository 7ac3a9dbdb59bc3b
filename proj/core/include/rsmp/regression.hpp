#pragma once

#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "rsmp/executor.hpp"

namespace rsmp {

struct RegressionOptions {
  int degree = 2;
  double ridge = 1e-8;
  /// Regress the pathwise sum terminal + sum_{j>=k} h (S_j + F_j) instead
  /// of the one-step value Y_{k+1} + h S_k. z always regresses the one-step
  /// value.
  bool multistep = false;
};

/// Least-squares projection onto polynomials (total degree <= `degree`) of
/// standardized features. Features with zero sample variance are dropped, so
/// a degenerate design falls back to the plain sample mean. The intercept is
/// not damped.
class LeastSquaresProjector {
 public:
  /// `features` is M x p, one row per path.
  LeastSquaresProjector(const Eigen::MatrixXd& features,
                        const RegressionOptions& options,
                        const Executor& executor = Executor());

  /// Fitted values (M x c) of each target column.
  Eigen::MatrixXd fit(const Eigen::MatrixXd& targets) const;
  /// Basis coefficients (K x c).
  Eigen::MatrixXd coefficients(const Eigen::MatrixXd& targets) const;

  Eigen::Index basis_size() const { return design_.cols(); }
  int active_features() const { return static_cast<int>(active_.size()); }
  /// max/min pivot of the damped Gram matrix.
  double condition() const { return condition_; }

 private:
  std::vector<int> active_;
  Eigen::MatrixXd design_;
  Eigen::LDLT<Eigen::MatrixXd> gram_;
  double condition_ = 1.0;
};

/// Exponent vectors of all monomials in `vars` variables of total degree
/// <= degree, constant first.
std::vector<std::vector<int>> monomial_exponents(int vars, int degree);

}  // namespace rsmp
