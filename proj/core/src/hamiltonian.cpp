#include "rsmp/hamiltonian.hpp"

namespace rsmp {

HamiltonianEval hamiltonian(const ControlProblem& problem,
                            const StatePoint& s, const Vec& v,
                            const AdjointPoint& a) {
  HamiltonianEval out;
  const Mat sigma = problem.diffusion(s.t, s.x);
  out.H = a.p.dot(problem.drift(s.t, s.x, v)) +
          (a.q.array() * sigma.array()).sum() +
          problem.generator(s.t, s.x, s.y, s.z, v);
  out.H_x = problem.drift_x(s.t, s.x, v).transpose() * a.p +
            problem.generator_gradient(s.t, s.x, s.y, s.z, v).fx;
  for (int j = 0; j < problem.d(); ++j) {
    out.H_x += problem.diffusion_x(s.t, s.x, j).transpose() * a.q.col(j);
  }
  return out;
}

double delta_hamiltonian(const ControlProblem& problem, const StatePoint& s,
                         const Vec& v, const Vec& ubar,
                         const AdjointPoint& a) {
  if (v == ubar) return 0.0;
  // The sigma term does not depend on the control and cancels.
  return a.p.dot(problem.drift(s.t, s.x, v) - problem.drift(s.t, s.x, ubar)) +
         (problem.generator(s.t, s.x, s.y, s.z, v) -
          problem.generator(s.t, s.x, s.y, s.z, ubar));
}

Vec g_quantity(const ControlProblem& problem, const StatePoint& s,
               const Vec& u, const AdjointPoint& a) {
  const GeneratorGradient g =
      problem.generator_gradient(s.t, s.x, s.y, s.z, u);
  Vec out = problem.drift_x(s.t, s.x, u).transpose() * a.p + g.fx +
            g.fy * a.p;
  for (int j = 0; j < problem.d(); ++j) {
    const Mat sx = problem.diffusion_x(s.t, s.x, j);
    out += sx.transpose() * a.q.col(j) +
           g.fz[j] * (sx.transpose() * a.p + a.q.col(j));
  }
  return out;
}

Vec delta_g(const ControlProblem& problem, const StatePoint& s, const Vec& v,
            const Vec& ubar, const AdjointPoint& a) {
  if (v == ubar) return Vec::Zero(problem.n());
  return g_quantity(problem, s, v, a) - g_quantity(problem, s, ubar, a);
}

Vec delta_b(const ControlProblem& problem, const StatePoint& s, const Vec& v,
            const Vec& ubar) {
  if (v == ubar) return Vec::Zero(problem.n());
  return problem.drift(s.t, s.x, v) - problem.drift(s.t, s.x, ubar);
}

double second_order_quantity(const ControlProblem& problem,
                             const StatePoint& s, const Vec& v,
                             const Vec& ubar, const AdjointPoint& a) {
  if (v == ubar) return 0.0;
  const Vec db = delta_b(problem, s, v, ubar);
  return delta_g(problem, s, v, ubar, a).dot(db) + db.dot(a.P * db);
}

}  // namespace rsmp
