#pragma once

#include "rsmp/problem.hpp"
#include "rsmp/types.hpp"

namespace rsmp {

/// (t, x, y, z) along the reference trajectory.
struct StatePoint {
  double t = 0.0;
  Vec x;
  double y = 0.0;
  Vec z;  // d
};

/// First and second order adjoint values at one (path, node).
struct AdjointPoint {
  Vec p;  // n
  Mat q;  // n x d, column j is q^j
  Mat P;  // n x n
};

struct HamiltonianEval {
  double H = 0.0;
  Vec H_x;
};

/// H = <p, b(t,x,v)> + sum_j <q^j, sigma^j(t,x)> + f(t,x,y,z,v) and its
/// x-gradient.
HamiltonianEval hamiltonian(const ControlProblem& problem,
                            const StatePoint& s, const Vec& v,
                            const AdjointPoint& a);

/// H(v) - H(ubar). Exactly 0 when v == ubar.
double delta_hamiltonian(const ControlProblem& problem, const StatePoint& s,
                         const Vec& v, const Vec& ubar, const AdjointPoint& a);

/// G(t;u) = H_x(t;u) + f_y(t;u) p + sum_j f_z^j(t;u) (sigma^j_x' p + q^j).
Vec g_quantity(const ControlProblem& problem, const StatePoint& s,
               const Vec& u, const AdjointPoint& a);

/// G(t;v) - G(t;ubar). Exactly the zero vector when v == ubar.
Vec delta_g(const ControlProblem& problem, const StatePoint& s, const Vec& v,
            const Vec& ubar, const AdjointPoint& a);

/// b(t,x,v) - b(t,x,ubar).
Vec delta_b(const ControlProblem& problem, const StatePoint& s, const Vec& v,
            const Vec& ubar);

/// S(t,v) = (dG + db' P) db. Exactly 0 when v == ubar.
double second_order_quantity(const ControlProblem& problem,
                             const StatePoint& s, const Vec& v,
                             const Vec& ubar, const AdjointPoint& a);

}  // namespace rsmp
