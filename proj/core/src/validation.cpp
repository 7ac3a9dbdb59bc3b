#include "rsmp/validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "rsmp/errors.hpp"
#include "rsmp/random.hpp"
#include "rsmp/sde.hpp"

namespace rsmp {
namespace {

constexpr std::uint32_t kValidationDomain = 0x56414c49u;

template <typename M>
double spectral(const M& m) {
  if (m.size() == 0) return 0.0;
  Eigen::MatrixXd dense = m;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense);
  return svd.singularValues()(0);
}

template <typename M>
double asymmetry(const M& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff() /
         std::max(1.0, m.cwiseAbs().maxCoeff());
}

struct Sample {
  double t = 0.0;
  Vec x;
  double y = 0.0;
  Vec z;
  Vec u;
};

std::string describe(const Sample& s) {
  std::ostringstream out;
  out << "t=" << s.t << " x=(";
  for (Eigen::Index i = 0; i < s.x.size(); ++i) {
    out << (i ? "," : "") << s.x[i];
  }
  out << ") y=" << s.y << " z=(";
  for (Eigen::Index i = 0; i < s.z.size(); ++i) {
    out << (i ? "," : "") << s.z[i];
  }
  out << ") u=(";
  for (Eigen::Index i = 0; i < s.u.size(); ++i) {
    out << (i ? "," : "") << s.u[i];
  }
  out << ")";
  return out.str();
}

// Names in the order the per-sample values are produced.
const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {
      "b_x",        "sigma_x",     "h_x",       "f_x",
      "f_y",        "f_z",         "b_growth",  "sigma_growth",
      "h_growth",   "f_growth",    "b_xx",      "sigma_xx",
      "D2f",        "h_xx",        "D2f_symmetry", "h_xx_symmetry"};
  return names;
}

template <typename V>
void require_finite(const V& v, const char* what, const Sample& s) {
  if (!v.allFinite()) {
    throw InvalidProblem(std::string("non-finite ") + what + " at " +
                         describe(s));
  }
}

void require_finite(double v, const char* what, const Sample& s) {
  if (!std::isfinite(v)) {
    throw InvalidProblem(std::string("non-finite ") + what + " at " +
                         describe(s));
  }
}

template <typename A, typename B>
double relative_gap(const A& a, const B& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a(i) - b(i)) /
                                std::max(1.0, std::abs(b(i))));
  }
  return worst;
}

}  // namespace

const AssumptionCheck& ValidationReport::check(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw InvalidArgument("no validation check named '" + name + "'");
}

double derivative_discrepancy(const ControlProblem& problem, double t,
                              const Vec& x, double y, const Vec& z,
                              const Vec& u, double step) {
  const CoefficientDerivatives a = problem.derivatives(t, x, y, z, u);
  const CoefficientDerivatives f =
      fd::derivatives(problem, t, x, y, z, u, step, step);
  double worst = relative_gap(a.b_x, f.b_x);
  for (std::size_t i = 0; i < a.b_xx.size(); ++i) {
    worst = std::max(worst, relative_gap(a.b_xx[i], f.b_xx[i]));
  }
  for (std::size_t j = 0; j < a.sigma_x.size(); ++j) {
    worst = std::max(worst, relative_gap(a.sigma_x[j], f.sigma_x[j]));
    for (std::size_t i = 0; i < a.sigma_xx[j].size(); ++i) {
      worst =
          std::max(worst, relative_gap(a.sigma_xx[j][i], f.sigma_xx[j][i]));
    }
  }
  worst = std::max(worst, relative_gap(a.f_grad.fx, f.f_grad.fx));
  worst = std::max(worst, std::abs(a.f_grad.fy - f.f_grad.fy) /
                              std::max(1.0, std::abs(f.f_grad.fy)));
  worst = std::max(worst, relative_gap(a.f_grad.fz, f.f_grad.fz));
  worst = std::max(worst, relative_gap(a.d2f, f.d2f));
  worst = std::max(worst, relative_gap(a.h_x, f.h_x));
  worst = std::max(worst, relative_gap(a.h_xx, f.h_xx));
  return worst;
}

ValidationReport validate_problem(const ControlProblem& problem,
                                  const ValidationOptions& options,
                                  const Executor& executor) {
  if (options.samples < 1) {
    throw InvalidArgument("validation needs sample_count >= 1");
  }
  if (!(options.radius > 0.0)) {
    throw InvalidArgument("validation radius must be positive");
  }
  const int n = problem.n();
  const int d = problem.d();
  const int m = problem.m();
  const double k0 = problem.lipschitz_bound();
  const auto& names = check_names();
  const bool analytic = problem.has_analytic_derivatives();
  const std::size_t width = names.size() + (analytic ? 1 : 0);

  std::vector<double> values(options.samples * width, 0.0);
  std::vector<Sample> samples(options.samples);
  const NormalStream stream(options.seed, kValidationDomain);

  executor.for_each(options.samples, [&](std::size_t i) {
    // Uniform draws for (t, x, y, z, u), two per Philox block.
    std::vector<double> uni;
    const int needed = 2 + n + d + m;
    for (int b = 0; static_cast<int>(uni.size()) < needed; ++b) {
      const auto pair = stream.uniforms(i, static_cast<std::uint32_t>(b));
      uni.push_back(pair[0]);
      uni.push_back(pair[1]);
    }
    int c = 0;
    Sample s;
    s.t = problem.horizon() * uni[c++];
    s.x = problem.initial_state();
    for (int k = 0; k < n; ++k) s.x[k] += options.radius * (2 * uni[c++] - 1);
    s.y = options.radius * (2 * uni[c++] - 1);
    s.z = Vec(d);
    for (int k = 0; k < d; ++k) s.z[k] = options.radius * (2 * uni[c++] - 1);
    Vec uu(m);
    for (int k = 0; k < m; ++k) uu[k] = uni[c++];
    s.u = problem.control_set().sample(uu);
    samples[i] = s;

    const Vec b = problem.drift(s.t, s.x, s.u);
    require_finite(b, "drift b", s);
    const Mat sigma = problem.diffusion(s.t, s.x);
    require_finite(sigma, "diffusion sigma", s);
    const double f = problem.generator(s.t, s.x, s.y, s.z, s.u);
    require_finite(f, "generator f", s);
    const double h = problem.terminal_cost(s.x);
    require_finite(h, "terminal cost h", s);

    const CoefficientDerivatives der =
        problem.derivatives(s.t, s.x, s.y, s.z, s.u);
    require_finite(der.b_x, "b_x", s);
    require_finite(der.f_grad.fx, "f_x", s);
    require_finite(der.f_grad.fy, "f_y", s);
    require_finite(der.f_grad.fz, "f_z", s);
    require_finite(der.d2f, "D2f", s);
    require_finite(der.h_x, "h_x", s);
    require_finite(der.h_xx, "h_xx", s);

    double sigma_x = 0.0;
    double sigma_xx = 0.0;
    for (int j = 0; j < d; ++j) {
      require_finite(der.sigma_x[j], "sigma_x", s);
      sigma_x = std::max(sigma_x, spectral(der.sigma_x[j]));
      for (const Mat& hess : der.sigma_xx[j]) {
        require_finite(hess, "sigma_xx", s);
        sigma_xx = std::max(sigma_xx, spectral(hess));
      }
    }
    double b_xx = 0.0;
    for (const Mat& hess : der.b_xx) {
      require_finite(hess, "b_xx", s);
      b_xx = std::max(b_xx, spectral(hess));
    }

    double* row = values.data() + i * width;
    row[0] = spectral(der.b_x);
    row[1] = sigma_x;
    row[2] = der.h_x.norm();
    row[3] = der.f_grad.fx.norm();
    row[4] = std::abs(der.f_grad.fy);
    row[5] = der.f_grad.fz.norm();
    row[6] = b.norm() / (1.0 + s.x.norm() + s.u.norm());
    row[7] = spectral(sigma) / (1.0 + s.x.norm());
    row[8] = std::abs(h) / (1.0 + s.x.norm());
    row[9] = std::abs(f) /
             (1.0 + s.x.norm() + std::abs(s.y) + s.z.norm() + s.u.norm());
    row[10] = b_xx;
    row[11] = sigma_xx;
    row[12] = spectral(der.d2f);
    row[13] = spectral(der.h_xx);
    row[14] = asymmetry(der.d2f);
    row[15] = asymmetry(der.h_xx);
    if (analytic) {
      row[16] = derivative_discrepancy(problem, s.t, s.x, s.y, s.z, s.u,
                                       options.fd_step);
    }
  });

  ValidationReport report;
  report.samples = options.samples;
  report.seed = options.seed;
  for (std::size_t c = 0; c < width; ++c) {
    AssumptionCheck check;
    check.name = c < names.size() ? names[c] : "analytic_vs_fd";
    if (c >= names.size()) {
      check.bound = options.fd_tolerance;
    } else if (check.name.ends_with("_symmetry")) {
      check.bound = 1e-8;
    } else {
      check.bound = k0;
    }
    std::size_t arg = 0;
    for (std::size_t i = 0; i < options.samples; ++i) {
      const double v = values[i * width + c];
      if (v > check.worst) {
        check.worst = v;
        arg = i;
      }
    }
    check.pass = check.worst <= check.bound * (1.0 + options.slack);
    check.where = describe(samples[arg]);
    report.pass = report.pass && check.pass;
    report.checks.push_back(std::move(check));
  }
  return report;
}

double admissibility_norm(const PathArray& controls) {
  if (controls.paths() == 0 || controls.nodes() == 0) {
    throw InvalidArgument("admissibility norm of an empty batch");
  }
  double best = 0.0;
  for (std::size_t k = 0; k < controls.nodes(); ++k) {
    double sum = 0.0;
    for (std::size_t path = 0; path < controls.paths(); ++path) {
      const double r2 = controls.at(path, k).squaredNorm();
      sum += r2 * r2 * r2 * r2;
    }
    best = std::max(best, std::pow(sum / static_cast<double>(controls.paths()),
                                   1.0 / kAdmissibilityMoment));
  }
  return best;
}

double admissibility_norm(const ControlProblem& problem,
                          const ControlProcess& u, const TimeGrid& grid,
                          const PathArray& state) {
  if (state.paths() == 0) {
    throw InvalidArgument("admissibility norm of an empty batch");
  }
  return admissibility_norm(realize_controls(problem, u, grid, state));
}

}  // namespace rsmp
