#include "rsmp/path_array.hpp"

#include <cmath>
#include <sstream>

#include "rsmp/errors.hpp"

namespace rsmp {

PathArray::PathArray(std::size_t paths, std::size_t nodes, std::size_t width,
                     double fill)
    : paths_(paths),
      nodes_(nodes),
      width_(width),
      data_(paths * nodes * width, fill) {}

TimeGrid::TimeGrid(double horizon, std::size_t steps)
    : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidArgument("time grid horizon must be positive and finite");
  }
  if (steps < 2) throw InvalidArgument("time grid needs at least 2 steps");
}

std::size_t TimeGrid::node_at(double t, double slack) const {
  const double position = t / step_size();
  const double rounded = std::round(position);
  if (std::abs(position - rounded) > slack || rounded < 0.0 ||
      rounded > static_cast<double>(steps_)) {
    std::ostringstream msg;
    msg << "time " << t << " is not a node of the grid (T=" << horizon_
        << ", N=" << steps_ << ")";
    throw InvalidArgument(msg.str());
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace rsmp
