#pragma once

#include <cmath>
#include <span>

namespace rsmp {

/// A Monte Carlo estimate and its standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Sample mean and standard error (sample sd / sqrt(M)). Summation runs in
/// index order, so the result does not depend on how the samples were
/// produced.
inline Estimate mean_estimate(std::span<const double> samples) {
  if (samples.empty()) return {};
  double sum = 0.0;
  for (double s : samples) sum += s;
  const double count = static_cast<double>(samples.size());
  const double mean = sum / count;
  if (samples.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  return {mean, std::sqrt(ss / (count - 1.0) / count)};
}

/// sqrt(a.se^2 + b.se^2).
inline double combined_se(const Estimate& a, const Estimate& b) {
  return std::sqrt(a.se * a.se + b.se * b.se);
}

}  // namespace rsmp
