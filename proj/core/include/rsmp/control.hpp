#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "rsmp/types.hpp"

namespace rsmp {

/// The control domain U: a finite point set or an axis-aligned box, plus the
/// finite evaluation grid used wherever a minimum or flatness over U is
/// scanned. U need not be convex.
class ControlSet {
 public:
  enum class Kind { kFinite, kBox };

  static ControlSet finite(std::vector<Vec> points);
  /// Box [lower, upper] with `points_per_axis` equispaced grid values per
  /// axis (tensor-product grid).
  static ControlSet box(Vec lower, Vec upper, int points_per_axis = 21);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::vector<Vec>& evaluation_grid() const { return grid_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  int points_per_axis() const { return points_per_axis_; }

  bool contains(const Vec& v, double tol = 1e-12) const;
  /// Maps uniforms in (0,1)^m to a point of the set (uniform on the box, or a
  /// uniformly chosen point of a finite set using the first uniform).
  Vec sample(const Vec& uniforms) const;
  /// Largest |v| over the evaluation grid.
  double max_norm() const;

 private:
  ControlSet() = default;

  Kind kind_ = Kind::kFinite;
  int dim_ = 0;
  Vec lower_;
  Vec upper_;
  int points_per_axis_ = 0;
  std::vector<Vec> grid_;
};

/// A candidate control u(.): constant, deterministic piecewise-constant on
/// the simulation steps, Markov feedback u(t, x), or a splice of two controls
/// over a set of steps (the spike variation).
class ControlProcess {
 public:
  enum class Kind { kConstant, kSchedule, kFeedback, kSpliced };
  using Rule = std::function<Vec(double, const Vec&)>;

  static ControlProcess constant(Vec value);
  /// One value per simulation step [t_k, t_{k+1}).
  static ControlProcess schedule(std::vector<Vec> per_step);
  static ControlProcess feedback(int dim, Rule rule);
  /// Equal to `replacement` on steps with active[k] true and to `base`
  /// elsewhere.
  static ControlProcess spliced(ControlProcess base, ControlProcess replacement,
                                std::vector<bool> active);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  /// True when values depend on the state (feedback anywhere in the tree).
  bool needs_state() const;

  /// Control value on step k (time t_k) at state x.
  Vec value(std::size_t step, double t, const Vec& x) const;

  const Vec& constant_value() const { return constant_; }
  const std::vector<Vec>& schedule_values() const { return schedule_; }
  const std::vector<bool>& active_steps() const { return active_; }
  const ControlProcess& base() const { return *base_; }
  const ControlProcess& replacement() const { return *replacement_; }

  /// Throws InvalidArgument when a constant or scheduled value lies outside
  /// the set. Feedback values are checked where they are evaluated.
  void check_in(const ControlSet& set) const;
  /// Throws when a schedule or splice does not cover `steps` steps.
  void check_steps(std::size_t steps) const;

 private:
  ControlProcess() = default;

  Kind kind_ = Kind::kConstant;
  int dim_ = 0;
  Vec constant_;
  std::vector<Vec> schedule_;
  Rule rule_;
  std::shared_ptr<const ControlProcess> base_;
  std::shared_ptr<const ControlProcess> replacement_;
  std::vector<bool> active_;
};

}  // namespace rsmp
