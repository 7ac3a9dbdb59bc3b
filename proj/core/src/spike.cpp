#include "rsmp/spike.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "rsmp/bsde.hpp"
#include "rsmp/errors.hpp"

namespace rsmp {
namespace {

constexpr double kCancellation = 64.0 * std::numeric_limits<double>::epsilon();

std::size_t snap(double t, const TimeGrid& grid, bool strict) {
  const double h = grid.step_size();
  const double k = std::round(t / h);
  if (strict && std::abs(k * h - t) > 1e-9 * std::max(1.0, grid.horizon())) {
    throw InvalidArgument("spike window endpoint " + std::to_string(t) +
                          " is not on the grid");
  }
  if (k < 0.0 || k > static_cast<double>(grid.steps())) {
    throw InvalidArgument("spike window endpoint " + std::to_string(t) +
                          " lies outside [0, T]");
  }
  return static_cast<std::size_t>(k);
}

double sup_power(const PathArray& a, std::size_t path, int power) {
  double sup = 0.0;
  for (std::size_t k = 0; k < a.nodes(); ++k) {
    sup = std::max(sup, a.at(path, k).norm());
  }
  return std::pow(sup, power);
}

void require_cost(const SpikeRun& run) {
  if (!run.cost) {
    throw PreconditionError(
        "spike run has no spiked cost; pass regression options to run_spike");
  }
}

}  // namespace

double SpikeSpec::measure() const {
  double total = 0.0;
  for (const SpikeWindow& w : windows) total += w.length();
  return total;
}

std::vector<bool> spike_steps(const std::vector<SpikeWindow>& windows,
                              const TimeGrid& grid) {
  std::vector<bool> active(grid.steps(), false);
  for (const SpikeWindow& w : windows) {
    if (!(w.end > w.start)) {
      throw InvalidArgument("spike window must have end > start");
    }
    const std::size_t begin = snap(w.start, grid, true);
    const std::size_t end = snap(w.end, grid, true);
    for (std::size_t k = begin; k < end; ++k) {
      if (active[k]) throw InvalidArgument("spike windows overlap");
      active[k] = true;
    }
  }
  return active;
}

ControlProcess build_spike(const ControlProcess& ubar, const SpikeSpec& spike,
                           const TimeGrid& grid) {
  if (spike.replacement.dim() != ubar.dim()) {
    throw InvalidArgument("replacement control has the wrong dimension");
  }
  return ControlProcess::spliced(ubar, spike.replacement,
                                 spike_steps(spike.windows, grid));
}

SpikeWindow ladder_window(double epsilon, double anchor,
                          const TimeGrid& grid) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  const std::size_t begin = snap(anchor, grid, false);
  const std::size_t end = snap(anchor + epsilon, grid, false);
  if (end - begin < kMinSpikeSteps) {
    throw InvalidArgument("epsilon " + std::to_string(epsilon) + " spans " +
                          std::to_string(end - begin) +
                          " steps; the ladder is too thin for the grid (need " +
                          std::to_string(kMinSpikeSteps) + ")");
  }
  return {grid.time(begin), grid.time(end)};
}

SpikeRun run_spike(const ControlProblem& problem, const ReferenceSolution& ref,
                   const ControlProcess& ubar, const SpikeSpec& spike,
                   const RegressionOptions* cost_options,
                   const Executor& executor) {
  const TimeGrid& grid = ref.noise.grid;
  const ControlProcess u_eps = build_spike(ubar, spike, grid);
  SpikeRun run;
  run.epsilon = spike.measure();
  run.u_on_base = realize_controls(problem, u_eps, grid, ref.base.x, executor);
  run.spiked = euler_forward(problem, u_eps, ref.noise, executor);
  run.variations = integrate_variations(problem, ref.base, run.u_on_base,
                                        ref.noise, executor);
  if (cost_options != nullptr) {
    run.cost = solve_cost_difference(problem, ref.base, ref.cost, run.spiked,
                                     ref.noise, *cost_options, executor);
  }
  return run;
}

StateResiduals state_residuals(const ReferenceSolution& ref,
                               const SpikeRun& run) {
  const PathArray& xbar = ref.base.x;
  const PathArray& xe = run.spiked.x;
  const PathArray& x1 = run.variations.x1;
  const PathArray& x2 = run.variations.x2;
  const std::size_t paths = xbar.paths();
  std::vector<double> dev8(paths), x1_8(paths), first2(paths), x2_2(paths),
      second2(paths);
  for (std::size_t path = 0; path < paths; ++path) {
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t k = 0; k < xbar.nodes(); ++k) {
      double r1 = 0.0;
      double r2 = 0.0;
      for (std::size_t i = 0; i < xbar.width(); ++i) {
        const double floor =
            kCancellation * (std::abs(xe(path, k, i)) +
                             std::abs(xbar(path, k, i)) +
                             std::abs(x1(path, k, i)) + std::abs(x2(path, k, i)));
        double a = xe(path, k, i) - xbar(path, k, i) - x1(path, k, i);
        double b = a - x2(path, k, i);
        if (std::abs(a) <= floor) a = 0.0;
        if (std::abs(b) <= floor) b = 0.0;
        r1 += a * a;
        r2 += b * b;
      }
      s1 = std::max(s1, r1);
      s2 = std::max(s2, r2);
    }
    double dev = 0.0;
    for (std::size_t k = 0; k < xbar.nodes(); ++k) {
      dev = std::max(dev, (xe.at(path, k) - xbar.at(path, k)).norm());
    }
    dev8[path] = std::pow(dev, 8);
    x1_8[path] = sup_power(x1, path, 8);
    first2[path] = s1;
    x2_2[path] = sup_power(x2, path, 2);
    second2[path] = s2;
  }
  return {mean_estimate(dev8), mean_estimate(x1_8), mean_estimate(first2),
          mean_estimate(x2_2), mean_estimate(second2)};
}

CostResidualFirst cost_residual_first(const ControlProblem& problem,
                                      const ReferenceSolution& ref,
                                      const SpikeRun& run,
                                      const RegressionOptions& options,
                                      const Executor& executor) {
  require_cost(run);
  const PathBatch& noise = ref.noise;
  const TimeGrid& grid = noise.grid;
  const VariationCost y1 =
      solve_variation_cost_first(problem, ref.base, ref.cost, ref.adj1,
                                 run.u_on_base, noise, options, executor);
  const PathArray& x1 = run.variations.x1;
  const int d = problem.d();
  const double h = grid.step_size();
  std::vector<double> ys(noise.paths), zs(noise.paths);
  executor.for_each(noise.paths, [&](std::size_t path) {
    double sup = 0.0;
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
      const double r = run.cost->y(path, k) - ref.cost.y(path, k) -
                       ref.adj1.p.at(path, k).dot(x1.at(path, k)) -
                       y1.y(path, k);
      sup = std::max(sup, std::abs(r));
    }
    ys[path] = std::pow(sup, 4);
    double acc = 0.0;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
      const StatePoint s = state_point(ref.base, ref.cost, grid, path, k);
      const AdjointPoint a = adjoint_point(problem, ref.adj1, nullptr, path, k);
      const Vec v1 = x1.at(path, k);
      for (int j = 0; j < d; ++j) {
        const double r = run.cost->z(path, k, j) - ref.cost.z(path, k, j) -
                         a.p.dot(problem.diffusion_x(s.t, s.x, j) * v1) -
                         a.q.col(j).dot(v1) - y1.z(path, k, j);
        acc += r * r * h;
      }
    }
    zs[path] = acc;
  });
  return {mean_estimate(ys), mean_estimate(zs), y1.y0};
}

CostResidualSecond cost_residual_second(const ControlProblem& problem,
                                        const ReferenceSolution& ref,
                                        const SpikeRun& run,
                                        const SingularityVerdict& singular,
                                        const RegressionOptions& options,
                                        const Executor& executor) {
  require_cost(run);
  if (!ref.adj2) {
    throw PreconditionError("second-order residual needs the second adjoint");
  }
  const PathBatch& noise = ref.noise;
  for (std::size_t path = 0; path < noise.paths; ++path) {
    for (std::size_t k = 0; k < noise.grid.steps(); ++k) {
      const Vec v = run.u_on_base.at(path, k);
      if (v == Vec(ref.base.u.at(path, k))) continue;
      const bool flat = std::any_of(
          singular.singular_set.begin(), singular.singular_set.end(),
          [&](const Vec& s) {
            return s.size() == v.size() &&
                   (s - v).lpNorm<Eigen::Infinity>() <= 1e-12;
          });
      if (!flat) {
        throw PreconditionError(
            "the reference control is not known to be singular on the spike "
            "values; run singularity_classify first and spike only into its "
            "singular set");
      }
    }
  }
  const PathArray& x1 = run.variations.x1;
  const PathArray& x2 = run.variations.x2;
  const VariationCost y2 = solve_variation_cost_second(
      problem, ref.base, ref.cost, ref.adj1, *ref.adj2, run.u_on_base, x1,
      noise, options, executor);
  const int n = problem.n();
  std::vector<double> rs(noise.paths);
  executor.for_each(noise.paths, [&](std::size_t path) {
    double sup = 0.0;
    for (std::size_t k = 0; k < noise.grid.nodes(); ++k) {
      const Vec v1 = x1.at(path, k);
      const Vec v2 = x2.at(path, k);
      const Mat P =
          Eigen::Map<const Eigen::MatrixXd>(ref.adj2->P.row(path, k), n, n);
      const double r = run.cost->y(path, k) - ref.cost.y(path, k) -
                       ref.adj1.p.at(path, k).dot(v1 + v2) -
                       0.5 * v1.dot(P * v1) - y2.y(path, k);
      sup = std::max(sup, std::abs(r));
    }
    rs[path] = sup * sup;
  });
  return {mean_estimate(rs), y2.y0};
}

RateFit fit_rate(const std::vector<double>& epsilons,
                 const std::vector<double>& norms) {
  if (epsilons.size() != norms.size()) {
    throw InvalidArgument("rate fit needs one norm per epsilon");
  }
  if (epsilons.size() < 4) {
    throw InvalidArgument("rate fit needs at least 4 ladder levels");
  }
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0) || !std::isfinite(norms[i])) {
      throw InvalidArgument("rate fit needs positive epsilons and finite norms");
    }
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
      throw InvalidArgument("epsilon ladder must be strictly decreasing");
    }
  }
  RateFit fit;
  fit.epsilons = epsilons;
  fit.norms = norms;
  if (std::all_of(norms.begin(), norms.end(),
                  [](double v) { return v == 0.0; })) {
    fit.exact = true;
    fit.slope = std::numeric_limits<double>::infinity();
    return fit;
  }
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (norms[i] > 0.0) {
      fit.used.push_back(i);
    } else {
      fit.warnings.push_back("dropped level epsilon=" +
                             std::to_string(epsilons[i]) +
                             " with non-positive norm");
    }
  }
  const std::size_t n = fit.used.size();
  if (n < 3) {
    fit.warnings.push_back("fewer than 3 positive norms; no slope");
    fit.slope = std::numeric_limits<double>::quiet_NaN();
    fit.half_width = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i : fit.used) {
    mx += std::log(epsilons[i]);
    my += std::log(norms[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i : fit.used) {
    const double dx = std::log(epsilons[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(norms[i]) - my);
  }
  fit.slope = sxy / sxx;
  const double intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i : fit.used) {
    const double r =
        std::log(norms[i]) - intercept - fit.slope * std::log(epsilons[i]);
    ssr += r * r;
  }
  const double dof = static_cast<double>(n - 2);
  const double se = std::sqrt(ssr / dof / sxx);
  const boost::math::students_t dist(dof);
  fit.half_width = boost::math::quantile(dist, 0.975) * se;
  return fit;
}

const std::map<std::string, RateTarget>& rate_targets() {
  static const std::map<std::string, RateTarget> targets = {
      {"x_dev8", {8.0, false}},    {"x1_8", {8.0, false}},
      {"x_first2", {4.0, false}},  {"x2_2", {4.0, false}},
      {"x_second2", {4.0, true}},  {"y_first4", {4.0, true}},
      {"y_second2", {4.0, true}}};
  return targets;
}

TaylorReport taylor_ladder(const ControlProblem& problem,
                           const ReferenceSolution& ref,
                           const ControlProcess& ubar,
                           const ControlProcess& replacement,
                           const TaylorOptions& options,
                           const SingularityVerdict* singular,
                           const Executor& executor) {
  if (options.cost_second && singular == nullptr) {
    throw PreconditionError(
        "second-order cost residual needs a singularity verdict; run "
        "singularity_classify first");
  }
  if (options.cost_second && !ref.adj2) {
    throw PreconditionError("second-order cost residual needs the second adjoint");
  }
  const TimeGrid& grid = ref.noise.grid;
  TaylorReport report;
  const bool need_cost = options.cost_first || options.cost_second;
  for (double eps : options.ladder) {
    const SpikeSpec spike{{ladder_window(eps, options.anchor, grid)},
                          replacement};
    const SpikeRun run =
        run_spike(problem, ref, ubar, spike,
                  need_cost ? &options.regression : nullptr, executor);
    TaylorLevel level;
    level.epsilon = run.epsilon;
    level.state = state_residuals(ref, run);
    if (options.cost_first) {
      level.cost_first = cost_residual_first(problem, ref, run,
                                             options.regression, executor);
    }
    if (options.cost_second) {
      level.cost_second = cost_residual_second(
          problem, ref, run, *singular, options.regression, executor);
    }
    report.levels.push_back(std::move(level));
  }

  std::vector<double> eps;
  for (const TaylorLevel& l : report.levels) eps.push_back(l.epsilon);
  auto add = [&](const std::string& name, auto&& get) {
    std::vector<double> norms;
    for (const TaylorLevel& l : report.levels) norms.push_back(get(l));
    report.fits.emplace(name, fit_rate(eps, norms));
  };
  add("x_dev8", [](const TaylorLevel& l) { return l.state.dev8.value; });
  add("x1_8", [](const TaylorLevel& l) { return l.state.x1_8.value; });
  add("x_first2", [](const TaylorLevel& l) { return l.state.first2.value; });
  add("x2_2", [](const TaylorLevel& l) { return l.state.x2_2.value; });
  add("x_second2", [](const TaylorLevel& l) { return l.state.second2.value; });
  if (options.cost_first) {
    add("y_first4",
        [](const TaylorLevel& l) { return l.cost_first->y4.value; });
    add("z_first2",
        [](const TaylorLevel& l) { return l.cost_first->z2.value; });
  }
  if (options.cost_second) {
    add("y_second2",
        [](const TaylorLevel& l) { return l.cost_second->y2.value; });
  }
  return report;
}

}  // namespace rsmp
