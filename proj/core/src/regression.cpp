#include "rsmp/regression.hpp"

#include <cmath>
#include <limits>

#include "rsmp/errors.hpp"

namespace rsmp {
namespace {

void extend(std::vector<std::vector<int>>& out, std::vector<int>& current,
            int var, int remaining) {
  if (var == static_cast<int>(current.size())) {
    out.push_back(current);
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    current[var] = e;
    extend(out, current, var + 1, remaining - e);
  }
  current[var] = 0;
}

}  // namespace

std::vector<std::vector<int>> monomial_exponents(int vars, int degree) {
  std::vector<std::vector<int>> all;
  std::vector<int> current(vars, 0);
  extend(all, current, 0, degree);
  std::vector<std::vector<int>> sorted;
  for (int total = 0; total <= degree; ++total) {
    for (const auto& e : all) {
      int sum = 0;
      for (int v : e) sum += v;
      if (sum == total) sorted.push_back(e);
    }
  }
  return sorted;
}

LeastSquaresProjector::LeastSquaresProjector(const Eigen::MatrixXd& features,
                                             const RegressionOptions& options,
                                             const Executor& executor) {
  if (options.degree < 0) {
    throw InvalidArgument("regression degree must be >= 0");
  }
  if (!(options.ridge >= 0.0)) {
    throw InvalidArgument("ridge damping must be >= 0");
  }
  const Eigen::Index rows = features.rows();
  if (rows < 1) throw InvalidArgument("regression needs at least one path");

  Eigen::VectorXd mean(features.cols());
  Eigen::VectorXd scale(features.cols());
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    mean[c] = features.col(c).mean();
    const double var =
        (features.col(c).array() - mean[c]).square().mean();
    const double sd = std::sqrt(var);
    scale[c] = sd;
    if (sd > 1e-12 * (1.0 + std::abs(mean[c])) && std::isfinite(sd)) {
      active_.push_back(static_cast<int>(c));
    }
  }
  const auto exps = monomial_exponents(static_cast<int>(active_.size()), options.degree);
  design_.resize(rows, static_cast<Eigen::Index>(exps.size()));
  executor.for_blocks(
      static_cast<std::size_t>(rows),
      [&](std::size_t, std::size_t begin, std::size_t end) {
        Eigen::VectorXd z(active_.size());
        for (std::size_t r = begin; r < end; ++r) {
          const auto row = static_cast<Eigen::Index>(r);
          for (std::size_t a = 0; a < active_.size(); ++a) {
            const int c = active_[a];
            z[a] = (features(row, c) - mean[c]) / scale[c];
          }
          for (std::size_t b = 0; b < exps.size(); ++b) {
            double v = 1.0;
            for (std::size_t a = 0; a < active_.size(); ++a) {
              for (int e = 0; e < exps[b][a]; ++e) v *= z[a];
            }
            design_(row, static_cast<Eigen::Index>(b)) = v;
          }
        }
      });

  Eigen::MatrixXd gram =
      design_.transpose() * design_ / static_cast<double>(rows);
  for (Eigen::Index b = 1; b < gram.rows(); ++b) gram(b, b) += options.ridge;
  gram_.compute(gram);
  if (gram_.info() != Eigen::Success) {
    throw SolverDivergence("regression normal equations failed to factor");
  }
  const Eigen::VectorXd pivots = gram_.vectorD().cwiseAbs();
  condition_ = pivots.minCoeff() > 0.0
                   ? pivots.maxCoeff() / pivots.minCoeff()
                   : std::numeric_limits<double>::infinity();
}

Eigen::MatrixXd LeastSquaresProjector::coefficients(
    const Eigen::MatrixXd& targets) const {
  if (targets.rows() != design_.rows()) {
    throw InvalidArgument("regression targets do not match the design");
  }
  const Eigen::MatrixXd rhs =
      design_.transpose() * targets / static_cast<double>(design_.rows());
  return gram_.solve(rhs);
}

Eigen::MatrixXd LeastSquaresProjector::fit(
    const Eigen::MatrixXd& targets) const {
  return design_ * coefficients(targets);
}

}  // namespace rsmp
