#include "rsmp/control.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rsmp/errors.hpp"

namespace rsmp {
namespace {

std::string format(const Vec& v) {
  std::ostringstream out;
  out << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out << (i ? ", " : "") << v[i];
  }
  out << ")";
  return out.str();
}

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw InvalidArgument("control dimension must be in [1, " +
                          std::to_string(kMaxDim) + "]");
  }
}

}  // namespace

ControlSet ControlSet::finite(std::vector<Vec> points) {
  if (points.empty()) throw InvalidArgument("finite control set is empty");
  ControlSet set;
  set.kind_ = Kind::kFinite;
  set.dim_ = static_cast<int>(points.front().size());
  check_dim(set.dim_);
  for (const Vec& p : points) {
    if (p.size() != set.dim_) {
      throw InvalidArgument("finite control set points differ in dimension");
    }
    if (!p.allFinite()) throw InvalidArgument("non-finite control point");
  }
  set.grid_ = std::move(points);
  return set;
}

ControlSet ControlSet::box(Vec lower, Vec upper, int points_per_axis) {
  if (lower.size() != upper.size()) {
    throw InvalidArgument("box bounds differ in dimension");
  }
  check_dim(static_cast<int>(lower.size()));
  if (!(lower.array() <= upper.array()).all() || !lower.allFinite() ||
      !upper.allFinite()) {
    throw InvalidArgument("box bounds must be finite with lower <= upper");
  }
  if (points_per_axis < 1) {
    throw InvalidArgument("box evaluation grid needs >= 1 point per axis");
  }
  ControlSet set;
  set.kind_ = Kind::kBox;
  set.dim_ = static_cast<int>(lower.size());
  set.lower_ = lower;
  set.upper_ = upper;
  set.points_per_axis_ = points_per_axis;

  std::size_t total = 1;
  for (int i = 0; i < set.dim_; ++i) total *= points_per_axis;
  set.grid_.reserve(total);
  for (std::size_t index = 0; index < total; ++index) {
    Vec point(set.dim_);
    std::size_t rest = index;
    for (int axis = 0; axis < set.dim_; ++axis) {
      const int j = static_cast<int>(rest % points_per_axis);
      rest /= points_per_axis;
      point[axis] =
          points_per_axis == 1
              ? 0.5 * (lower[axis] + upper[axis])
              : lower[axis] + (upper[axis] - lower[axis]) * j /
                                  static_cast<double>(points_per_axis - 1);
    }
    set.grid_.push_back(point);
  }
  return set;
}

bool ControlSet::contains(const Vec& v, double tol) const {
  if (v.size() != dim_ || !v.allFinite()) return false;
  if (kind_ == Kind::kBox) {
    return ((v.array() >= lower_.array() - tol) &&
            (v.array() <= upper_.array() + tol))
        .all();
  }
  return std::any_of(grid_.begin(), grid_.end(), [&](const Vec& p) {
    return (p - v).cwiseAbs().maxCoeff() <= tol;
  });
}

Vec ControlSet::sample(const Vec& uniforms) const {
  if (kind_ == Kind::kBox) {
    return lower_ + (upper_ - lower_).cwiseProduct(uniforms.head(dim_));
  }
  const auto index = std::min<std::size_t>(
      grid_.size() - 1,
      static_cast<std::size_t>(uniforms[0] * static_cast<double>(grid_.size())));
  return grid_[index];
}

double ControlSet::max_norm() const {
  double best = 0.0;
  for (const Vec& p : grid_) best = std::max(best, p.norm());
  return best;
}

ControlProcess ControlProcess::constant(Vec value) {
  check_dim(static_cast<int>(value.size()));
  ControlProcess u;
  u.kind_ = Kind::kConstant;
  u.dim_ = static_cast<int>(value.size());
  u.constant_ = std::move(value);
  return u;
}

ControlProcess ControlProcess::schedule(std::vector<Vec> per_step) {
  if (per_step.empty()) throw InvalidArgument("control schedule is empty");
  ControlProcess u;
  u.kind_ = Kind::kSchedule;
  u.dim_ = static_cast<int>(per_step.front().size());
  check_dim(u.dim_);
  for (const Vec& v : per_step) {
    if (v.size() != u.dim_) {
      throw InvalidArgument("control schedule values differ in dimension");
    }
  }
  u.schedule_ = std::move(per_step);
  return u;
}

ControlProcess ControlProcess::feedback(int dim, Rule rule) {
  check_dim(dim);
  if (!rule) throw InvalidArgument("feedback rule is empty");
  ControlProcess u;
  u.kind_ = Kind::kFeedback;
  u.dim_ = dim;
  u.rule_ = std::move(rule);
  return u;
}

ControlProcess ControlProcess::spliced(ControlProcess base,
                                       ControlProcess replacement,
                                       std::vector<bool> active) {
  if (base.dim() != replacement.dim()) {
    throw InvalidArgument("spliced controls differ in dimension");
  }
  ControlProcess u;
  u.kind_ = Kind::kSpliced;
  u.dim_ = base.dim();
  u.base_ = std::make_shared<const ControlProcess>(std::move(base));
  u.replacement_ =
      std::make_shared<const ControlProcess>(std::move(replacement));
  u.active_ = std::move(active);
  return u;
}

bool ControlProcess::needs_state() const {
  switch (kind_) {
    case Kind::kFeedback:
      return true;
    case Kind::kSpliced:
      return base_->needs_state() || replacement_->needs_state();
    default:
      return false;
  }
}

Vec ControlProcess::value(std::size_t step, double t, const Vec& x) const {
  switch (kind_) {
    case Kind::kConstant:
      return constant_;
    case Kind::kSchedule:
      if (step >= schedule_.size()) {
        throw InvalidArgument("control schedule shorter than the grid");
      }
      return schedule_[step];
    case Kind::kFeedback: {
      Vec v = rule_(t, x);
      if (v.size() != dim_) {
        throw InvalidArgument("feedback rule returned wrong dimension");
      }
      return v;
    }
    case Kind::kSpliced:
      if (step < active_.size() && active_[step]) {
        return replacement_->value(step, t, x);
      }
      return base_->value(step, t, x);
  }
  return constant_;
}

void ControlProcess::check_in(const ControlSet& set) const {
  if (dim_ != set.dim()) {
    throw InvalidArgument("control dimension does not match the control set");
  }
  switch (kind_) {
    case Kind::kConstant:
      if (!set.contains(constant_)) {
        throw InvalidArgument("constant control " + format(constant_) +
                              " lies outside the control set");
      }
      break;
    case Kind::kSchedule:
      for (std::size_t k = 0; k < schedule_.size(); ++k) {
        if (!set.contains(schedule_[k])) {
          throw InvalidArgument("scheduled control " + format(schedule_[k]) +
                                " at step " + std::to_string(k) +
                                " lies outside the control set");
        }
      }
      break;
    case Kind::kFeedback:
      break;
    case Kind::kSpliced:
      base_->check_in(set);
      replacement_->check_in(set);
      break;
  }
}

void ControlProcess::check_steps(std::size_t steps) const {
  if (kind_ == Kind::kSchedule && schedule_.size() < steps) {
    throw InvalidArgument("control schedule has " +
                          std::to_string(schedule_.size()) +
                          " values but the grid has " + std::to_string(steps) +
                          " steps");
  }
  if (kind_ == Kind::kSpliced) {
    if (active_.size() != steps) {
      throw InvalidArgument("spliced control mask does not match the grid");
    }
    base_->check_steps(steps);
    replacement_->check_steps(steps);
  }
}

}  // namespace rsmp
