#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsmp/control.hpp"
#include "rsmp/types.hpp"

namespace rsmp {

/// Gradient of the generator f in (x, y, z).
struct GeneratorGradient {
  Vec fx;      // n
  double fy = 0.0;
  Vec fz;      // d
};

/// Every first and second derivative of the coefficients at one point. The
/// second-order tensors are stored as one matrix per output component:
/// b_xx[i] = Hessian of b^i, sigma_xx[j][i] = Hessian of sigma^{ij}.
struct CoefficientDerivatives {
  Mat b_x;
  std::vector<Mat> b_xx;
  std::vector<Mat> sigma_x;                // per noise column
  std::vector<std::vector<Mat>> sigma_xx;  // [column][component]
  GeneratorGradient f_grad;
  JointMat d2f;                            // (x, y, z) ordering
  Vec h_x;
  Mat h_xx;
};

/// A controlled forward-backward system
///   dx = b(t,x,u) dt + sigma(t,x) dW,   x(0) = x0,
///   dy = -f(t,x,y,z,u) dt + z dW,       y(T) = h(x(T)),
/// with cost J(u) = y(0). Immutable after construction; safe to share.
///
/// Derivative methods default to central finite differences of the
/// coefficients; problems with closed forms override them.
class ControlProblem {
 public:
  ControlProblem(std::string name, Dimensions dims, double horizon, Vec x0,
                 ControlSet controls, double lipschitz_bound);
  virtual ~ControlProblem() = default;

  const std::string& name() const { return name_; }
  const Dimensions& dims() const { return dims_; }
  int n() const { return dims_.state; }
  int d() const { return dims_.noise; }
  int m() const { return dims_.control; }
  double horizon() const { return horizon_; }
  const Vec& initial_state() const { return x0_; }
  const ControlSet& control_set() const { return controls_; }
  double lipschitz_bound() const { return lipschitz_bound_; }

  /// Parameters the problem was built from, echoed into reports.
  const nlohmann::json& params() const { return params_; }
  void set_params(nlohmann::json params) { params_ = std::move(params); }

  virtual Vec drift(double t, const Vec& x, const Vec& u) const = 0;
  /// n x d; column j multiplies dW^j.
  virtual Mat diffusion(double t, const Vec& x) const = 0;
  virtual double generator(double t, const Vec& x, double y, const Vec& z,
                           const Vec& u) const = 0;
  virtual double terminal_cost(const Vec& x) const = 0;

  virtual bool has_analytic_derivatives() const { return false; }

  virtual Mat drift_x(double t, const Vec& x, const Vec& u) const;
  /// sum_i w_i * Hessian(b^i).
  virtual Mat drift_xx_weighted(double t, const Vec& x, const Vec& u,
                                const Vec& w) const;
  /// Jacobian of column j of sigma.
  virtual Mat diffusion_x(double t, const Vec& x, int column) const;
  /// sum_i w_i * Hessian(sigma^{i,column}).
  virtual Mat diffusion_xx_weighted(double t, const Vec& x, int column,
                                    const Vec& w) const;
  virtual GeneratorGradient generator_gradient(double t, const Vec& x,
                                               double y, const Vec& z,
                                               const Vec& u) const;
  virtual JointMat generator_hessian(double t, const Vec& x, double y,
                                     const Vec& z, const Vec& u) const;
  virtual Vec terminal_gradient(const Vec& x) const;
  virtual Mat terminal_hessian(const Vec& x) const;

  /// Full derivative bundle through the (possibly analytic) virtuals.
  CoefficientDerivatives derivatives(double t, const Vec& x, double y,
                                     const Vec& z, const Vec& u) const;

 private:
  std::string name_;
  Dimensions dims_;
  double horizon_;
  Vec x0_;
  ControlSet controls_;
  double lipschitz_bound_;
  nlohmann::json params_ = nlohmann::json::object();
};

using ProblemPtr = std::shared_ptr<const ControlProblem>;

/// Central finite differences of the raw coefficients. These never call the
/// derivative virtuals, so they serve as an independent check on analytic
/// overrides.
namespace fd {

inline constexpr double kFirstStep = 1e-6;
inline constexpr double kSecondStep = 1e-4;

Mat drift_x(const ControlProblem& problem, double t, const Vec& x,
            const Vec& u, double step = kFirstStep);
Mat drift_xx_weighted(const ControlProblem& problem, double t, const Vec& x,
                      const Vec& u, const Vec& w, double step = kSecondStep);
Mat diffusion_x(const ControlProblem& problem, double t, const Vec& x,
                int column, double step = kFirstStep);
Mat diffusion_xx_weighted(const ControlProblem& problem, double t,
                          const Vec& x, int column, const Vec& w,
                          double step = kSecondStep);
GeneratorGradient generator_gradient(const ControlProblem& problem, double t,
                                     const Vec& x, double y, const Vec& z,
                                     const Vec& u, double step = kFirstStep);
JointMat generator_hessian(const ControlProblem& problem, double t,
                           const Vec& x, double y, const Vec& z, const Vec& u,
                           double step = kSecondStep);
Vec terminal_gradient(const ControlProblem& problem, const Vec& x,
                      double step = kFirstStep);
Mat terminal_hessian(const ControlProblem& problem, const Vec& x,
                     double step = kSecondStep);

/// Whole bundle by finite differences with one step for every order.
CoefficientDerivatives derivatives(const ControlProblem& problem, double t,
                                   const Vec& x, double y, const Vec& z,
                                   const Vec& u, double first_step,
                                   double second_step);

}  // namespace fd

/// A problem assembled from callables, with finite-difference derivatives.
/// Handy for tests and one-off experiments.
class FunctionProblem final : public ControlProblem {
 public:
  using DriftFn = std::function<Vec(double, const Vec&, const Vec&)>;
  using DiffusionFn = std::function<Mat(double, const Vec&)>;
  using GeneratorFn =
      std::function<double(double, const Vec&, double, const Vec&, const Vec&)>;
  using TerminalFn = std::function<double(const Vec&)>;

  struct Functions {
    DriftFn drift;
    DiffusionFn diffusion;
    GeneratorFn generator;
    TerminalFn terminal;
  };

  FunctionProblem(std::string name, Dimensions dims, double horizon, Vec x0,
                  ControlSet controls, double lipschitz_bound, Functions fns);

  Vec drift(double t, const Vec& x, const Vec& u) const override;
  Mat diffusion(double t, const Vec& x) const override;
  double generator(double t, const Vec& x, double y, const Vec& z,
                   const Vec& u) const override;
  double terminal_cost(const Vec& x) const override;

 private:
  Functions fns_;
};

}  // namespace rsmp
