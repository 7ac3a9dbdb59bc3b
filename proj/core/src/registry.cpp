#include "rsmp/registry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/SVD>

#include "rsmp/errors.hpp"
#include "rsmp/random.hpp"

namespace rsmp {
namespace {

using nlohmann::json;

constexpr double kSampleRadius = 1.0;
constexpr double kMaxParam = 10.0;
constexpr double kMaxHorizon = 100.0;

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

void check_keys(const json& params, const std::set<std::string>& allowed,
                const std::string& name) {
  if (params.is_null()) return;
  if (!params.is_object()) {
    throw InvalidArgument(name + " parameters must be a key-value object");
  }
  for (const auto& item : params.items()) {
    if (!allowed.count(item.key())) {
      throw InvalidArgument("unknown parameter '" + item.key() + "' for " +
                            name);
    }
  }
}

double number(const json& params, const std::string& key, double fallback) {
  if (params.is_null() || !params.contains(key)) return fallback;
  const json& v = params.at(key);
  if (!v.is_number()) {
    throw InvalidArgument("parameter '" + key + "' must be a number");
  }
  const double out = v.get<double>();
  if (!std::isfinite(out)) {
    throw InvalidArgument("parameter '" + key + "' must be finite");
  }
  return out;
}

void check_range(const std::string& key, double value, double lo, double hi) {
  if (value < lo || value > hi) {
    throw InvalidArgument("parameter '" + key + "' = " +
                          std::to_string(value) + " outside [" +
                          std::to_string(lo) + ", " + std::to_string(hi) +
                          "]");
  }
}

void check_horizon(double horizon) {
  if (!(horizon > 0.0) || horizon > kMaxHorizon) {
    throw InvalidArgument("parameter 'T' must lie in (0, " +
                          std::to_string(kMaxHorizon) + "]");
  }
}

Eigen::MatrixXd read_matrix(const json& v, int rows, int cols,
                            const std::string& key) {
  Eigen::MatrixXd out(rows, cols);
  if (v.is_number()) {
    const double s = v.get<double>();
    if (rows == cols) {
      out = s * Eigen::MatrixXd::Identity(rows, cols);
    } else {
      out.setConstant(s);
    }
    return out;
  }
  if (!v.is_array()) {
    throw InvalidArgument("parameter '" + key + "' must be a number or array");
  }
  if (!v.empty() && v.front().is_number()) {
    // Flat list: a vector-shaped matrix.
    if (static_cast<int>(v.size()) != rows * cols ||
        (rows != 1 && cols != 1)) {
      throw InvalidArgument("parameter '" + key + "' must be " +
                            std::to_string(rows) + "x" + std::to_string(cols));
    }
    for (int i = 0; i < rows * cols; ++i) out(i) = v[i].get<double>();
    return out;
  }
  if (static_cast<int>(v.size()) != rows) {
    throw InvalidArgument("parameter '" + key + "' must have " +
                          std::to_string(rows) + " rows");
  }
  for (int i = 0; i < rows; ++i) {
    if (!v[i].is_array() || static_cast<int>(v[i].size()) != cols) {
      throw InvalidArgument("parameter '" + key + "' row " +
                            std::to_string(i) + " must have " +
                            std::to_string(cols) + " entries");
    }
    for (int j = 0; j < cols; ++j) {
      if (!v[i][j].is_number()) {
        throw InvalidArgument("parameter '" + key + "' has a non-number");
      }
      out(i, j) = v[i][j].get<double>();
    }
  }
  return out;
}

Eigen::MatrixXd matrix_param(const json& params, const std::string& key,
                             int rows, int cols) {
  if (!params.contains(key)) return Eigen::MatrixXd::Zero(rows, cols);
  Eigen::MatrixXd out = read_matrix(params.at(key), rows, cols, key);
  if (!out.allFinite()) {
    throw InvalidArgument("parameter '" + key + "' must be finite");
  }
  return out;
}

Eigen::VectorXd vector_param(const json& params, const std::string& key,
                             int size) {
  return matrix_param(params, key, size, 1).col(0);
}

int array_depth(const json& v) {
  int depth = 0;
  const json* cur = &v;
  while (cur->is_array() && !cur->empty()) {
    ++depth;
    cur = &cur->front();
  }
  return depth;
}

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vec to_vec(const Eigen::VectorXd& v) { return Vec(v); }

class Example1Problem final : public ControlProblem {
 public:
  Example1Problem(double a, double beta, double gamma, double horizon,
                  int grid_points, double bound)
      : ControlProblem("example1", Dimensions{2, 1, 1}, horizon,
                       Vec::Unit(2, 0),
                       ControlSet::box(Vec::Constant(1, -1.0),
                                       Vec::Constant(1, 1.0), grid_points),
                       bound),
        a_(a),
        beta_(beta),
        gamma_(gamma) {}

  Vec drift(double, const Vec& x, const Vec& u) const override {
    return a_matrix(u[0]) * x;
  }
  Mat diffusion(double, const Vec& x) const override {
    return s_matrix() * x;
  }
  double generator(double, const Vec&, double y, const Vec& z,
                   const Vec&) const override {
    return beta_ * y + gamma_ * z[0];
  }
  double terminal_cost(const Vec& x) const override {
    return 0.5 * x.squaredNorm();
  }

  bool has_analytic_derivatives() const override { return true; }
  Mat drift_x(double, const Vec&, const Vec& u) const override {
    return a_matrix(u[0]);
  }
  Mat drift_xx_weighted(double, const Vec&, const Vec&,
                        const Vec&) const override {
    return Mat::Zero(2, 2);
  }
  Mat diffusion_x(double, const Vec&, int) const override {
    return s_matrix();
  }
  Mat diffusion_xx_weighted(double, const Vec&, int,
                            const Vec&) const override {
    return Mat::Zero(2, 2);
  }
  GeneratorGradient generator_gradient(double, const Vec&, double,
                                       const Vec&,
                                       const Vec&) const override {
    return {Vec::Zero(2), beta_, Vec::Constant(1, gamma_)};
  }
  JointMat generator_hessian(double, const Vec&, double, const Vec&,
                             const Vec&) const override {
    return JointMat::Zero(4, 4);
  }
  Vec terminal_gradient(const Vec& x) const override { return x; }
  Mat terminal_hessian(const Vec&) const override {
    return Mat::Identity(2, 2);
  }

 private:
  Mat a_matrix(double u) const {
    Mat m(2, 2);
    m << -0.5 * a_ * a_, -u, u, -0.5 * a_ * a_;
    return m;
  }
  Mat s_matrix() const {
    Mat m(2, 2);
    m << 0.0, -a_, a_, 0.0;
    return m;
  }

  double a_;
  double beta_;
  double gamma_;
};

class Example2Problem final : public ControlProblem {
 public:
  Example2Problem(int sign, double alpha, double beta, double horizon,
                  double bound)
      : ControlProblem("example2", Dimensions{1, 1, 1}, horizon,
                       Vec::Constant(1, 1.0),
                       ControlSet::finite({Vec::Constant(1, -1.0),
                                           Vec::Constant(1, 0.0),
                                           Vec::Constant(1, 1.0)}),
                       bound),
        sign_(sign),
        alpha_(alpha),
        beta_(beta) {}

  Vec drift(double, const Vec&, const Vec& u) const override { return u; }
  Mat diffusion(double, const Vec& x) const override {
    return Mat::Constant(1, 1, x[0] - 1.0);
  }
  double generator(double, const Vec&, double y, const Vec& z,
                   const Vec&) const override {
    return alpha_ * y + beta_ * z[0];
  }
  double terminal_cost(const Vec& x) const override {
    return 0.5 * sign_ * (x[0] - 1.0) * (x[0] - 1.0);
  }

  bool has_analytic_derivatives() const override { return true; }
  Mat drift_x(double, const Vec&, const Vec&) const override {
    return Mat::Zero(1, 1);
  }
  Mat drift_xx_weighted(double, const Vec&, const Vec&,
                        const Vec&) const override {
    return Mat::Zero(1, 1);
  }
  Mat diffusion_x(double, const Vec&, int) const override {
    return Mat::Identity(1, 1);
  }
  Mat diffusion_xx_weighted(double, const Vec&, int,
                            const Vec&) const override {
    return Mat::Zero(1, 1);
  }
  GeneratorGradient generator_gradient(double, const Vec&, double,
                                       const Vec&,
                                       const Vec&) const override {
    return {Vec::Zero(1), alpha_, Vec::Constant(1, beta_)};
  }
  JointMat generator_hessian(double, const Vec&, double, const Vec&,
                             const Vec&) const override {
    return JointMat::Zero(3, 3);
  }
  Vec terminal_gradient(const Vec& x) const override {
    return Vec::Constant(1, sign_ * (x[0] - 1.0));
  }
  Mat terminal_hessian(const Vec&) const override {
    return Mat::Constant(1, 1, static_cast<double>(sign_));
  }

 private:
  int sign_;
  double alpha_;
  double beta_;
};

ControlSet affine_controls(const AffineSpec& spec, int m) {
  if (!spec.points.empty()) {
    std::vector<Vec> pts;
    for (const auto& p : spec.points) {
      if (p.size() != m) {
        throw InvalidArgument("affine control point has wrong dimension");
      }
      pts.push_back(to_vec(p));
    }
    return ControlSet::finite(std::move(pts));
  }
  if (spec.lower.size() != m || spec.upper.size() != m) {
    throw InvalidArgument("affine control box bounds must have length m");
  }
  return ControlSet::box(to_vec(spec.lower), to_vec(spec.upper),
                         spec.grid_points);
}

double affine_bound(const AffineSpec& s) {
  if (s.lipschitz_bound > 0.0) return s.lipschitz_bound;
  const double reach = s.x0.norm() + kSampleRadius;
  double bound = 1.0;
  for (double v :
       {spectral_norm(s.A), spectral_norm(s.B), s.c.norm(), spectral_norm(s.D),
        std::abs(s.alpha), s.beta.norm(), spectral_norm(s.R),
        spectral_norm(s.R) * reach + s.r.norm(), spectral_norm(s.H),
        spectral_norm(s.H) * reach + s.g.norm()}) {
    bound = std::max(bound, v);
  }
  for (const auto& cj : s.C) bound = std::max(bound, spectral_norm(cj));
  return bound;
}

class AffineProblem final : public ControlProblem {
 public:
  explicit AffineProblem(const AffineSpec& s)
      : ControlProblem("affine",
                       Dimensions{static_cast<int>(s.A.rows()),
                                  static_cast<int>(s.D.cols()),
                                  static_cast<int>(s.B.cols())},
                       s.horizon, to_vec(s.x0),
                       affine_controls(s, static_cast<int>(s.B.cols())),
                       affine_bound(s)),
        A_(s.A),
        B_(s.B),
        c_(s.c),
        D_(s.D),
        alpha_(s.alpha),
        beta_(s.beta),
        R_(s.R),
        r_(s.r),
        K_(s.K),
        k_(s.k),
        H_(s.H),
        g_(s.g) {
    for (const auto& cj : s.C) C_.emplace_back(cj);
  }

  Vec drift(double, const Vec& x, const Vec& u) const override {
    return A_ * x + B_ * u + c_;
  }
  Mat diffusion(double, const Vec& x) const override {
    Mat out(n(), d());
    for (int j = 0; j < d(); ++j) out.col(j) = C_[j] * x + D_.col(j);
    return out;
  }
  double generator(double, const Vec& x, double y, const Vec& z,
                   const Vec& u) const override {
    return alpha_ * y + beta_.dot(z) + 0.5 * x.dot(R_ * x) + r_.dot(x) +
           0.5 * u.dot(K_ * u) + k_.dot(u);
  }
  double terminal_cost(const Vec& x) const override {
    return 0.5 * x.dot(H_ * x) + g_.dot(x);
  }

  bool has_analytic_derivatives() const override { return true; }
  Mat drift_x(double, const Vec&, const Vec&) const override { return A_; }
  Mat drift_xx_weighted(double, const Vec&, const Vec&,
                        const Vec&) const override {
    return Mat::Zero(n(), n());
  }
  Mat diffusion_x(double, const Vec&, int column) const override {
    return C_[column];
  }
  Mat diffusion_xx_weighted(double, const Vec&, int,
                            const Vec&) const override {
    return Mat::Zero(n(), n());
  }
  GeneratorGradient generator_gradient(double, const Vec& x, double,
                                       const Vec&,
                                       const Vec&) const override {
    return {R_ * x + r_, alpha_, beta_};
  }
  JointMat generator_hessian(double, const Vec&, double, const Vec&,
                             const Vec&) const override {
    JointMat out = JointMat::Zero(dims().joint(), dims().joint());
    out.topLeftCorner(n(), n()) = R_;
    return out;
  }
  Vec terminal_gradient(const Vec& x) const override { return H_ * x + g_; }
  Mat terminal_hessian(const Vec&) const override { return H_; }

 private:
  Mat A_;
  Mat B_;
  Vec c_;
  std::vector<Mat> C_;
  Mat D_;
  double alpha_;
  Vec beta_;
  Mat R_;
  Vec r_;
  Mat K_;
  Vec k_;
  Mat H_;
  Vec g_;
};

void check_affine(const AffineSpec& s) {
  const auto n = s.A.rows();
  const auto m = s.B.cols();
  const auto d = s.D.cols();
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument("affine spec: " + what);
  };
  need(n >= 1 && n <= kMaxDim, "n must be in [1, 8]");
  need(m >= 1 && m <= kMaxDim, "m must be in [1, 8]");
  need(d >= 1 && d <= kMaxDim, "d must be in [1, 8]");
  need(s.A.cols() == n, "A must be n x n");
  need(s.B.rows() == n, "B must be n x m");
  need(s.c.size() == n, "c must have length n");
  need(static_cast<Eigen::Index>(s.C.size()) == d, "C must hold d matrices");
  for (const auto& cj : s.C) {
    need(cj.rows() == n && cj.cols() == n, "each C_j must be n x n");
  }
  need(s.D.rows() == n, "D must be n x d");
  need(s.beta.size() == d, "beta must have length d");
  need(s.R.rows() == n && s.R.cols() == n, "R must be n x n");
  need(s.r.size() == n, "r must have length n");
  need(s.K.rows() == m && s.K.cols() == m, "K must be m x m");
  need(s.k.size() == m, "k must have length m");
  need(s.H.rows() == n && s.H.cols() == n, "H must be n x n");
  need(s.g.size() == n, "g must have length n");
  need(s.x0.size() == n, "x0 must have length n");
  need((s.R - s.R.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
       "R must be symmetric");
  need((s.K - s.K.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
       "K must be symmetric");
  need((s.H - s.H.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
       "H must be symmetric");
  check_horizon(s.horizon);
}

}  // namespace

AffineSpec AffineSpec::zeros(int n, int d, int m) {
  AffineSpec s;
  s.A = Eigen::MatrixXd::Zero(n, n);
  s.B = Eigen::MatrixXd::Zero(n, m);
  s.c = Eigen::VectorXd::Zero(n);
  s.C.assign(d, Eigen::MatrixXd::Zero(n, n));
  s.D = Eigen::MatrixXd::Zero(n, d);
  s.beta = Eigen::VectorXd::Zero(d);
  s.R = Eigen::MatrixXd::Zero(n, n);
  s.r = Eigen::VectorXd::Zero(n);
  s.K = Eigen::MatrixXd::Zero(m, m);
  s.k = Eigen::VectorXd::Zero(m);
  s.H = Eigen::MatrixXd::Zero(n, n);
  s.g = Eigen::VectorXd::Zero(n);
  s.x0 = Eigen::VectorXd::Zero(n);
  s.lower = Eigen::VectorXd::Constant(m, -1.0);
  s.upper = Eigen::VectorXd::Constant(m, 1.0);
  s.grid_points = m == 1 ? 21 : 5;
  return s;
}

std::vector<std::string> registry_names() {
  return {"example1", "example2", "affine"};
}

ProblemPtr make_example1(double a, double beta, double gamma, double horizon,
                         int grid_points, double lipschitz_bound) {
  check_range("a", a, 0.0, kMaxParam);
  check_range("beta", beta, -kMaxParam, kMaxParam);
  check_range("gamma", gamma, -kMaxParam, kMaxParam);
  check_horizon(horizon);
  if (grid_points < 2 || grid_points > 10001) {
    throw InvalidArgument("parameter 'grid_points' must lie in [2, 10001]");
  }
  if (lipschitz_bound <= 0.0) {
    lipschitz_bound = std::max({3.0, std::sqrt(std::pow(a, 4) / 4.0 + 1.0), a,
                                std::abs(beta), std::abs(gamma)});
  }
  auto problem = std::make_shared<Example1Problem>(a, beta, gamma, horizon,
                                                   grid_points,
                                                   lipschitz_bound);
  problem->set_params({{"a", a},
                       {"beta", beta},
                       {"gamma", gamma},
                       {"T", horizon},
                       {"grid_points", grid_points},
                       {"K0", lipschitz_bound}});
  return problem;
}

ProblemPtr make_example2(int sign, double alpha, double beta, double horizon,
                         double lipschitz_bound) {
  if (sign != 1 && sign != -1) {
    throw InvalidArgument("parameter 'sign' must be +1 or -1");
  }
  check_range("alpha", alpha, -kMaxParam, kMaxParam);
  check_range("beta", beta, -kMaxParam, kMaxParam);
  check_horizon(horizon);
  if (lipschitz_bound <= 0.0) {
    lipschitz_bound = std::max({1.0, std::abs(alpha), std::abs(beta)});
  }
  auto problem = std::make_shared<Example2Problem>(sign, alpha, beta, horizon,
                                                   lipschitz_bound);
  problem->set_params({{"sign", sign},
                       {"alpha", alpha},
                       {"beta", beta},
                       {"T", horizon},
                       {"K0", lipschitz_bound}});
  return problem;
}

ProblemPtr make_affine_problem(const AffineSpec& spec) {
  check_affine(spec);
  auto problem = std::make_shared<AffineProblem>(spec);
  json params = affine_spec_to_json(spec);
  params["K0"] = problem->lipschitz_bound();
  problem->set_params(std::move(params));
  return problem;
}

AffineSpec parse_affine_spec(const json& params) {
  check_keys(params,
             {"n", "m", "d", "A", "B", "c", "C", "D", "alpha", "beta", "R",
              "r", "K", "k", "H", "g", "x0", "T", "U", "K0"},
             "affine");
  const json p = params.is_null() ? json::object() : params;
  auto dim = [&](const char* key) {
    const double v = number(p, key, 1.0);
    if (v != std::floor(v) || v < 1 || v > kMaxDim) {
      throw InvalidArgument(std::string("parameter '") + key +
                            "' must be an integer in [1, 8]");
    }
    return static_cast<int>(v);
  };
  const int n = dim("n");
  const int m = dim("m");
  const int d = dim("d");

  AffineSpec s = AffineSpec::zeros(n, d, m);
  s.A = matrix_param(p, "A", n, n);
  s.B = matrix_param(p, "B", n, m);
  s.c = vector_param(p, "c", n);
  if (p.contains("C")) {
    const json& c = p.at("C");
    if (c.is_number()) {
      s.C.assign(d, c.get<double>() * Eigen::MatrixXd::Identity(n, n));
    } else if (array_depth(c) == 3) {
      if (static_cast<int>(c.size()) != d) {
        throw InvalidArgument("parameter 'C' must hold d matrices");
      }
      for (int j = 0; j < d; ++j) s.C[j] = read_matrix(c[j], n, n, "C");
    } else if (d == 1) {
      s.C[0] = read_matrix(c, n, n, "C");
    } else if (n == 1 && array_depth(c) == 1 &&
               static_cast<int>(c.size()) == d) {
      for (int j = 0; j < d; ++j) {
        s.C[j] = Eigen::MatrixXd::Constant(1, 1, c[j].get<double>());
      }
    } else {
      throw InvalidArgument("parameter 'C' must be a number or d n x n "
                            "matrices");
    }
  }
  s.D = matrix_param(p, "D", n, d);
  s.alpha = number(p, "alpha", 0.0);
  s.beta = vector_param(p, "beta", d);
  s.R = matrix_param(p, "R", n, n);
  s.r = vector_param(p, "r", n);
  s.K = matrix_param(p, "K", m, m);
  s.k = vector_param(p, "k", m);
  s.H = matrix_param(p, "H", n, n);
  s.g = vector_param(p, "g", n);
  s.x0 = vector_param(p, "x0", n);
  s.horizon = number(p, "T", 1.0);
  s.lipschitz_bound = number(p, "K0", 0.0);
  if (p.contains("U")) {
    const json& u = p.at("U");
    if (!u.is_object()) throw InvalidArgument("parameter 'U' must be an object");
    check_keys(u, {"lower", "upper", "grid_points", "points"}, "affine U");
    if (u.contains("points")) {
      for (const json& pt : u.at("points")) {
        s.points.push_back(read_matrix(pt, m, 1, "U.points").col(0));
      }
      if (s.points.empty()) throw InvalidArgument("U.points is empty");
    } else {
      s.lower = vector_param(u, "lower", m);
      s.upper = vector_param(u, "upper", m);
      s.grid_points = static_cast<int>(number(u, "grid_points", s.grid_points));
    }
  }
  check_affine(s);
  return s;
}

json affine_spec_to_json(const AffineSpec& s) {
  json out = {{"n", s.A.rows()},
              {"m", s.B.cols()},
              {"d", s.D.cols()},
              {"A", to_json(s.A)},
              {"B", to_json(s.B)},
              {"c", to_json(Eigen::VectorXd(s.c))},
              {"D", to_json(s.D)},
              {"alpha", s.alpha},
              {"beta", to_json(Eigen::VectorXd(s.beta))},
              {"R", to_json(s.R)},
              {"r", to_json(Eigen::VectorXd(s.r))},
              {"K", to_json(s.K)},
              {"k", to_json(Eigen::VectorXd(s.k))},
              {"H", to_json(s.H)},
              {"g", to_json(Eigen::VectorXd(s.g))},
              {"x0", to_json(Eigen::VectorXd(s.x0))},
              {"T", s.horizon}};
  json c = json::array();
  for (const auto& cj : s.C) c.push_back(to_json(cj));
  out["C"] = c;
  if (!s.points.empty()) {
    json pts = json::array();
    for (const auto& p : s.points) pts.push_back(to_json(p));
    out["U"] = {{"points", pts}};
  } else {
    out["U"] = {{"lower", to_json(s.lower)},
                {"upper", to_json(s.upper)},
                {"grid_points", s.grid_points}};
  }
  if (s.lipschitz_bound > 0.0) out["K0"] = s.lipschitz_bound;
  return out;
}

AffineSpec random_affine_spec(std::uint64_t seed, int n, int d, int m) {
  const NormalStream stream(seed, 0x41464631u);
  std::uint64_t counter = 0;
  auto normal = [&]() { return stream.pair(counter++, 0)[0]; };
  auto fill = [&](Eigen::MatrixXd& mat, double scale) {
    for (Eigen::Index i = 0; i < mat.size(); ++i) mat(i) = scale * normal();
  };
  auto fill_vec = [&](Eigen::VectorXd& v, double scale) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = scale * normal();
  };
  auto psd = [&](int size, double scale) {
    Eigen::MatrixXd l(size, size);
    fill(l, 1.0);
    Eigen::MatrixXd out = scale * (l * l.transpose()) / size;
    return Eigen::MatrixXd(0.5 * (out + out.transpose()));
  };

  AffineSpec s = AffineSpec::zeros(n, d, m);
  fill(s.A, 0.3);
  fill(s.B, 0.8);
  fill_vec(s.c, 0.3);
  for (auto& cj : s.C) fill(cj, 0.2);
  fill(s.D, 0.4);
  s.alpha = 0.3 * normal();
  fill_vec(s.beta, 0.2);
  s.R = psd(n, 0.5);
  fill_vec(s.r, 0.3);
  s.K = psd(m, 0.5);
  fill_vec(s.k, 0.3);
  s.H = psd(n, 1.0);
  fill_vec(s.g, 0.5);
  fill_vec(s.x0, 0.5);
  return s;
}

ProblemPtr build_registry_problem(const std::string& name,
                                  const json& params) {
  if (name == "example1") {
    check_keys(params, {"a", "beta", "gamma", "T", "grid_points", "K0"},
               name);
    const json p = params.is_null() ? json::object() : params;
    const double grid = number(p, "grid_points", 21.0);
    if (grid != std::floor(grid)) {
      throw InvalidArgument("parameter 'grid_points' must be an integer");
    }
    return make_example1(number(p, "a", 1.0), number(p, "beta", 0.0),
                         number(p, "gamma", 0.0), number(p, "T", 1.0),
                         static_cast<int>(grid), number(p, "K0", 0.0));
  }
  if (name == "example2") {
    check_keys(params, {"sign", "alpha", "beta", "T", "K0"}, name);
    const json p = params.is_null() ? json::object() : params;
    const double sign = number(p, "sign", 1.0);
    if (sign != 1.0 && sign != -1.0) {
      throw InvalidArgument("parameter 'sign' must be +1 or -1");
    }
    return make_example2(static_cast<int>(sign), number(p, "alpha", 0.0),
                         number(p, "beta", 0.0), number(p, "T", 1.0),
                         number(p, "K0", 0.0));
  }
  if (name == "affine") return make_affine_problem(parse_affine_spec(params));
  throw InvalidArgument("unknown registry problem '" + name +
                        "' (expected example1, example2 or affine)");
}

}  // namespace rsmp
