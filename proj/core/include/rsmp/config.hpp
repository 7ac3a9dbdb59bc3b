#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsmp/control.hpp"
#include "rsmp/errors.hpp"
#include "rsmp/maximum_principle.hpp"
#include "rsmp/problem.hpp"
#include "rsmp/regression.hpp"
#include "rsmp/spike.hpp"
#include "rsmp/validation.hpp"

namespace rsmp {

/// Every validation failure of a config, one "field.path: message" per entry.
class ConfigError : public InvalidArgument {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// A constant control, or piecewise constant in time: values[i] holds on
/// [breaks[i-1], breaks[i]).
struct ControlConfig {
  std::string type = "constant";
  std::vector<double> value;
  std::vector<double> breaks;
  std::vector<std::vector<double>> values;
};

struct NumericsConfig {
  std::size_t steps = 512;
  std::size_t paths = 4096;
  std::uint64_t seed = 42;
  int workers = 1;
  int degree = 2;
  double ridge = 1e-8;
  bool multistep = false;
};

struct ConditionConfig {
  /// Empty means the control set's evaluation grid.
  std::vector<std::vector<double>> region;
  double tolerance = -1.0;
  double relative_tolerance = 1e-2;
  double flat_fraction = 0.99;
  std::size_t node_stride = 1;
  /// Independent sub-batch solves for the check standard errors.
  std::size_t replicates = 8;
};

struct SpikeConfig {
  std::vector<double> replacement;
  std::vector<double> ladder = {0.2, 0.1, 0.05, 0.025};
  double anchor = 0.0;
  /// Explicit windows [start, end] for a single spike run.
  std::vector<std::pair<double, double>> windows;
  bool cost_first = true;
  bool cost_second = true;
};

struct ValidationConfig {
  std::size_t samples = 256;
  std::uint64_t seed = 0;
  double radius = 1.0;
};

struct OutputConfig {
  std::string dir = ".";
};

struct RunConfig {
  std::string problem = "example1";
  nlohmann::json params = nlohmann::json::object();
  ControlConfig control;
  NumericsConfig numerics;
  ConditionConfig condition;
  SpikeConfig spike;
  ValidationConfig validation;
  OutputConfig output;

  /// Throws ConfigError listing every problem found.
  void validate() const;

  ProblemPtr build_problem() const;
  /// Throws ConfigError when the control does not fit the problem.
  ControlProcess build_control(const ControlProblem& problem) const;
  ControlProcess build_replacement(const ControlProblem& problem) const;
  std::vector<Vec> build_region(const ControlProblem& problem) const;
  RegressionOptions regression() const;
  CheckOptions check_options() const;
  TaylorOptions taylor_options() const;
  ValidationOptions validation_options() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Unknown keys and ill-typed values are errors; missing keys keep their
/// defaults. Throws ConfigError.
RunConfig config_from_json(const nlohmann::json& doc);

/// Environment variable naming the default config directory.
inline constexpr const char* kConfigDirEnv = "RSMP_CONFIG_DIR";

/// `name` as given when it exists, else $RSMP_CONFIG_DIR/name, then with a
/// ".json" suffix. Throws InvalidArgument when nothing is found.
std::string resolve_config_path(const std::string& name);
RunConfig load_config(const std::string& name);

}  // namespace rsmp
