#include "rsmp/problem.hpp"

#include <algorithm>
#include <cmath>

#include "rsmp/errors.hpp"

namespace rsmp {
namespace {

double scaled(double step, double value) {
  return step * std::max(1.0, std::abs(value));
}

// Central-difference Jacobian of a vector function of x.
template <typename Fn>
Mat jacobian(const Vec& x, int rows, double step, const Fn& fn) {
  const int n = static_cast<int>(x.size());
  Mat out(rows, n);
  Vec xp = x;
  Vec xm = x;
  for (int k = 0; k < n; ++k) {
    const double e = scaled(step, x[k]);
    xp[k] = x[k] + e;
    xm[k] = x[k] - e;
    out.col(k) = (fn(xp) - fn(xm)) / (2.0 * e);
    xp[k] = x[k];
    xm[k] = x[k];
  }
  return out;
}

// Central-difference Hessian of a scalar function of a joint vector.
template <typename V, typename M, typename Fn>
M hessian(const V& x, double step, const Fn& fn) {
  const int n = static_cast<int>(x.size());
  M out(n, n);
  V xs = x;
  const double f0 = fn(x);
  for (int i = 0; i < n; ++i) {
    const double ei = scaled(step, x[i]);
    xs[i] = x[i] + ei;
    const double fp = fn(xs);
    xs[i] = x[i] - ei;
    const double fm = fn(xs);
    xs[i] = x[i];
    out(i, i) = (fp - 2.0 * f0 + fm) / (ei * ei);
    for (int j = 0; j < i; ++j) {
      const double ej = scaled(step, x[j]);
      double acc = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          xs[i] = x[i] + si * ei;
          xs[j] = x[j] + sj * ej;
          acc += si * sj * fn(xs);
        }
      }
      xs[i] = x[i];
      xs[j] = x[j];
      out(i, j) = out(j, i) = acc / (4.0 * ei * ej);
    }
  }
  return out;
}

JointVec pack(const Vec& x, double y, const Vec& z) {
  JointVec v(x.size() + 1 + z.size());
  v << x, y, z;
  return v;
}

}  // namespace

ControlProblem::ControlProblem(std::string name, Dimensions dims,
                               double horizon, Vec x0, ControlSet controls,
                               double lipschitz_bound)
    : name_(std::move(name)),
      dims_(dims),
      horizon_(horizon),
      x0_(std::move(x0)),
      controls_(std::move(controls)),
      lipschitz_bound_(lipschitz_bound) {
  if (dims.state < 1 || dims.state > kMaxDim || dims.noise < 1 ||
      dims.noise > kMaxDim || dims.control < 1 || dims.control > kMaxDim) {
    throw InvalidArgument("problem dimensions must be in [1, " +
                          std::to_string(kMaxDim) + "]");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidArgument("horizon must be positive and finite");
  }
  if (x0_.size() != dims.state || !x0_.allFinite()) {
    throw InvalidArgument("initial state must be finite with length n");
  }
  if (controls_.dim() != dims.control) {
    throw InvalidArgument("control set dimension differs from m");
  }
  if (!(lipschitz_bound > 0.0) || !std::isfinite(lipschitz_bound)) {
    throw InvalidArgument("lipschitz bound must be positive and finite");
  }
}

Mat ControlProblem::drift_x(double t, const Vec& x, const Vec& u) const {
  return fd::drift_x(*this, t, x, u);
}

Mat ControlProblem::drift_xx_weighted(double t, const Vec& x, const Vec& u,
                                      const Vec& w) const {
  return fd::drift_xx_weighted(*this, t, x, u, w);
}

Mat ControlProblem::diffusion_x(double t, const Vec& x, int column) const {
  return fd::diffusion_x(*this, t, x, column);
}

Mat ControlProblem::diffusion_xx_weighted(double t, const Vec& x, int column,
                                          const Vec& w) const {
  return fd::diffusion_xx_weighted(*this, t, x, column, w);
}

GeneratorGradient ControlProblem::generator_gradient(double t, const Vec& x,
                                                     double y, const Vec& z,
                                                     const Vec& u) const {
  return fd::generator_gradient(*this, t, x, y, z, u);
}

JointMat ControlProblem::generator_hessian(double t, const Vec& x, double y,
                                           const Vec& z, const Vec& u) const {
  return fd::generator_hessian(*this, t, x, y, z, u);
}

Vec ControlProblem::terminal_gradient(const Vec& x) const {
  return fd::terminal_gradient(*this, x);
}

Mat ControlProblem::terminal_hessian(const Vec& x) const {
  return fd::terminal_hessian(*this, x);
}

CoefficientDerivatives ControlProblem::derivatives(double t, const Vec& x,
                                                   double y, const Vec& z,
                                                   const Vec& u) const {
  const int dim = n();
  CoefficientDerivatives out;
  out.b_x = drift_x(t, x, u);
  for (int i = 0; i < dim; ++i) {
    out.b_xx.push_back(drift_xx_weighted(t, x, u, Vec::Unit(dim, i)));
  }
  out.sigma_xx.resize(d());
  for (int j = 0; j < d(); ++j) {
    out.sigma_x.push_back(diffusion_x(t, x, j));
    for (int i = 0; i < dim; ++i) {
      out.sigma_xx[j].push_back(
          diffusion_xx_weighted(t, x, j, Vec::Unit(dim, i)));
    }
  }
  out.f_grad = generator_gradient(t, x, y, z, u);
  out.d2f = generator_hessian(t, x, y, z, u);
  out.h_x = terminal_gradient(x);
  out.h_xx = terminal_hessian(x);
  return out;
}

namespace fd {

Mat drift_x(const ControlProblem& problem, double t, const Vec& x,
            const Vec& u, double step) {
  return jacobian(x, problem.n(), step,
                  [&](const Vec& xs) { return problem.drift(t, xs, u); });
}

Mat drift_xx_weighted(const ControlProblem& problem, double t, const Vec& x,
                      const Vec& u, const Vec& w, double step) {
  return hessian<Vec, Mat>(x, step, [&](const Vec& xs) {
    return w.dot(problem.drift(t, xs, u));
  });
}

Mat diffusion_x(const ControlProblem& problem, double t, const Vec& x,
                int column, double step) {
  return jacobian(x, problem.n(), step, [&](const Vec& xs) -> Vec {
    return problem.diffusion(t, xs).col(column);
  });
}

Mat diffusion_xx_weighted(const ControlProblem& problem, double t,
                          const Vec& x, int column, const Vec& w,
                          double step) {
  return hessian<Vec, Mat>(x, step, [&](const Vec& xs) {
    return w.dot(problem.diffusion(t, xs).col(column));
  });
}

GeneratorGradient generator_gradient(const ControlProblem& problem, double t,
                                     const Vec& x, double y, const Vec& z,
                                     const Vec& u, double step) {
  const int n = problem.n();
  const int d = problem.d();
  const JointVec joint = pack(x, y, z);
  JointVec grad(joint.size());
  JointVec js = joint;
  auto eval = [&](const JointVec& v) {
    return problem.generator(t, v.head(n), v[n], v.tail(d), u);
  };
  for (Eigen::Index k = 0; k < joint.size(); ++k) {
    const double e = scaled(step, joint[k]);
    js[k] = joint[k] + e;
    const double fp = eval(js);
    js[k] = joint[k] - e;
    const double fm = eval(js);
    js[k] = joint[k];
    grad[k] = (fp - fm) / (2.0 * e);
  }
  return {grad.head(n), grad[n], grad.tail(d)};
}

JointMat generator_hessian(const ControlProblem& problem, double t,
                           const Vec& x, double y, const Vec& z, const Vec& u,
                           double step) {
  const int n = problem.n();
  const int d = problem.d();
  return hessian<JointVec, JointMat>(
      pack(x, y, z), step, [&](const JointVec& v) {
        return problem.generator(t, v.head(n), v[n], v.tail(d), u);
      });
}

Vec terminal_gradient(const ControlProblem& problem, const Vec& x,
                      double step) {
  Mat jac = jacobian(x, 1, step, [&](const Vec& xs) {
    Vec out(1);
    out[0] = problem.terminal_cost(xs);
    return out;
  });
  return jac.row(0).transpose();
}

Mat terminal_hessian(const ControlProblem& problem, const Vec& x,
                     double step) {
  return hessian<Vec, Mat>(
      x, step, [&](const Vec& xs) { return problem.terminal_cost(xs); });
}

CoefficientDerivatives derivatives(const ControlProblem& problem, double t,
                                   const Vec& x, double y, const Vec& z,
                                   const Vec& u, double first_step,
                                   double second_step) {
  const int n = problem.n();
  CoefficientDerivatives out;
  out.b_x = drift_x(problem, t, x, u, first_step);
  for (int i = 0; i < n; ++i) {
    out.b_xx.push_back(
        drift_xx_weighted(problem, t, x, u, Vec::Unit(n, i), second_step));
  }
  out.sigma_xx.resize(problem.d());
  for (int j = 0; j < problem.d(); ++j) {
    out.sigma_x.push_back(diffusion_x(problem, t, x, j, first_step));
    for (int i = 0; i < n; ++i) {
      out.sigma_xx[j].push_back(diffusion_xx_weighted(
          problem, t, x, j, Vec::Unit(n, i), second_step));
    }
  }
  out.f_grad = generator_gradient(problem, t, x, y, z, u, first_step);
  out.d2f = generator_hessian(problem, t, x, y, z, u, second_step);
  out.h_x = terminal_gradient(problem, x, first_step);
  out.h_xx = terminal_hessian(problem, x, second_step);
  return out;
}

}  // namespace fd

FunctionProblem::FunctionProblem(std::string name, Dimensions dims,
                                 double horizon, Vec x0, ControlSet controls,
                                 double lipschitz_bound, Functions fns)
    : ControlProblem(std::move(name), dims, horizon, std::move(x0),
                     std::move(controls), lipschitz_bound),
      fns_(std::move(fns)) {
  if (!fns_.drift || !fns_.diffusion || !fns_.generator || !fns_.terminal) {
    throw InvalidArgument("function problem needs b, sigma, f and h");
  }
}

Vec FunctionProblem::drift(double t, const Vec& x, const Vec& u) const {
  return fns_.drift(t, x, u);
}

Mat FunctionProblem::diffusion(double t, const Vec& x) const {
  return fns_.diffusion(t, x);
}

double FunctionProblem::generator(double t, const Vec& x, double y,
                                  const Vec& z, const Vec& u) const {
  return fns_.generator(t, x, y, z, u);
}

double FunctionProblem::terminal_cost(const Vec& x) const {
  return fns_.terminal(x);
}

}  // namespace rsmp
