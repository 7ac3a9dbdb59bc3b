#include "rsmp/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>
#include <type_traits>

#include "rsmp/registry.hpp"
#include "rsmp/report_io.hpp"

namespace rsmp {
namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& items) {
  std::ostringstream out;
  out << "invalid config:";
  for (const auto& s : items) out << "\n  " << s;
  return out.str();
}

// Reads typed fields from one JSON object, recording errors under `path`.
class Reader {
 public:
  Reader(const json& obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (!obj_.is_object()) fail("", "must be an object");
  }

  ~Reader() {
    if (!obj_.is_object()) return;
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) fail(item.key(), "unknown key");
    }
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void fail(const std::string& key, const std::string& what) {
    errors_.push_back((key.empty() ? path_ : field(key)) + ": " + what);
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return nullptr;
    return &obj_.at(key);
  }

  void read(const std::string& key, std::string& out) {
    if (const json* v = get(key)) {
      if (v->is_string()) out = v->get<std::string>();
      else fail(key, "expected a string");
    }
  }

  void read(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (v->is_number()) out = v->get<double>();
      else fail(key, "expected a number");
    }
  }

  void read(const std::string& key, bool& out) {
    if (const json* v = get(key)) {
      if (v->is_boolean()) out = v->get<bool>();
      else fail(key, "expected true or false");
    }
  }

  template <typename Int>
  void read_int(const std::string& key, Int& out) {
    if (const json* v = get(key)) {
      if (v->is_number_integer() || v->is_number_unsigned()) {
        if (std::is_unsigned_v<Int> && v->is_number_integer() &&
            v->get<std::int64_t>() < 0) {
          fail(key, "must be non-negative");
        } else {
          out = v->get<Int>();
        }
      } else {
        fail(key, "expected an integer");
      }
    }
  }

  void read(const std::string& key, std::vector<double>& out) {
    if (const json* v = get(key)) read_vector(*v, field(key), out);
  }

  void read(const std::string& key, std::vector<std::vector<double>>& out) {
    if (const json* v = get(key)) {
      if (!v->is_array()) {
        fail(key, "expected an array of arrays");
        return;
      }
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        std::vector<double> row;
        read_vector((*v)[i], field(key) + "[" + std::to_string(i) + "]", row);
        out.push_back(std::move(row));
      }
    }
  }

  const json& raw() const { return obj_; }

 private:
  void read_vector(const json& v, const std::string& where,
                   std::vector<double>& out) {
    if (v.is_number()) {
      out = {v.get<double>()};
      return;
    }
    if (!v.is_array()) {
      errors_.push_back(where + ": expected a number or an array of numbers");
      return;
    }
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number()) {
        errors_.push_back(where + ": expected an array of numbers");
        return;
      }
      out.push_back(e.get<double>());
    }
  }

  const json& obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

const json kEmpty = json::object();

const json& section(const json& doc, const char* key) {
  return doc.contains(key) ? doc.at(key) : kEmpty;
}

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

bool finite_all(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

void check_fits(const ControlProblem& problem, const std::vector<double>& v,
                const std::string& field, std::vector<std::string>& errors) {
  if (static_cast<int>(v.size()) != problem.m()) {
    errors.push_back(field + ": expected " + std::to_string(problem.m()) +
                     " components, got " + std::to_string(v.size()));
  } else if (!problem.control_set().contains(to_vec(v))) {
    errors.push_back(field + ": outside the control set");
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : InvalidArgument(join(problems)), problems_(std::move(problems)) {}

void RunConfig::validate() const {
  std::vector<std::string> errors;
  const auto& names = registry_names();
  if (std::find(names.begin(), names.end(), problem) == names.end()) {
    errors.push_back("problem: unknown registry problem '" + problem + "'");
  }
  if (!params.is_object()) errors.push_back("params: must be an object");

  if (control.type == "constant") {
    if (!finite_all(control.value)) {
      errors.push_back("control.value: must be finite");
    }
  } else if (control.type == "piecewise") {
    if (control.values.size() != control.breaks.size() + 1) {
      errors.push_back(
          "control.values: need one more value than there are breaks");
    }
    if (!std::is_sorted(control.breaks.begin(), control.breaks.end()) ||
        std::adjacent_find(control.breaks.begin(), control.breaks.end()) !=
            control.breaks.end()) {
      errors.push_back("control.breaks: must be strictly increasing");
    }
  } else {
    errors.push_back("control.type: expected 'constant' or 'piecewise'");
  }

  if (numerics.steps == 0) errors.push_back("numerics.steps: must be positive");
  if (numerics.paths < 2) errors.push_back("numerics.paths: must be at least 2");
  if (numerics.workers < 1) {
    errors.push_back("numerics.workers: must be positive");
  }
  if (numerics.degree < 0 || numerics.degree > 6) {
    errors.push_back("numerics.degree: must lie in 0..6");
  }
  if (!(numerics.ridge >= 0.0) || !std::isfinite(numerics.ridge)) {
    errors.push_back("numerics.ridge: must be finite and non-negative");
  }

  if (!(condition.relative_tolerance > 0.0)) {
    errors.push_back("condition.relative_tolerance: must be positive");
  }
  if (!(condition.flat_fraction > 0.0 && condition.flat_fraction <= 1.0)) {
    errors.push_back("condition.flat_fraction: must lie in (0, 1]");
  }
  if (condition.node_stride == 0) {
    errors.push_back("condition.node_stride: must be positive");
  }
  if (!std::isfinite(condition.tolerance)) {
    errors.push_back("condition.tolerance: must be finite");
  }

  if (spike.ladder.empty() && spike.windows.empty()) {
    errors.push_back("spike.ladder: must not be empty");
  }
  for (std::size_t i = 0; i < spike.ladder.size(); ++i) {
    if (!(spike.ladder[i] > 0.0)) {
      errors.push_back("spike.ladder[" + std::to_string(i) +
                       "]: must be positive");
    }
  }
  for (std::size_t i = 0; i < spike.windows.size(); ++i) {
    if (!(spike.windows[i].second > spike.windows[i].first)) {
      errors.push_back("spike.windows[" + std::to_string(i) +
                       "]: end must exceed start");
    }
  }

  if (validation.samples == 0) {
    errors.push_back("validation.samples: must be positive");
  }
  if (!(validation.radius > 0.0)) {
    errors.push_back("validation.radius: must be positive");
  }

  if (output.dir.empty()) {
    errors.push_back("output.dir: must not be empty");
  } else {
    std::error_code ec;
    const std::filesystem::path dir(output.dir);
    if (std::filesystem::exists(dir, ec) &&
        !std::filesystem::is_directory(dir, ec)) {
      errors.push_back("output.dir: exists and is not a directory");
    }
  }

  if (errors.empty()) {
    try {
      auto p = build_problem();
      if (control.type == "constant" && !control.value.empty()) {
        check_fits(*p, control.value, "control.value", errors);
      }
      for (std::size_t i = 0; i < control.values.size(); ++i) {
        check_fits(*p, control.values[i],
                   "control.values[" + std::to_string(i) + "]", errors);
      }
      if (!spike.replacement.empty()) {
        check_fits(*p, spike.replacement, "spike.replacement", errors);
      }
      for (std::size_t i = 0; i < condition.region.size(); ++i) {
        check_fits(*p, condition.region[i],
                   "condition.region[" + std::to_string(i) + "]", errors);
      }
      for (double b : control.breaks) {
        if (!(b > 0.0 && b < p->horizon())) {
          errors.push_back("control.breaks: must lie inside (0, T)");
          break;
        }
      }
      if (spike.anchor < 0.0 || spike.anchor >= p->horizon()) {
        errors.push_back("spike.anchor: must lie in [0, T)");
      }
    } catch (const InvalidArgument& e) {
      errors.push_back(std::string("params: ") + e.what());
    } catch (const InvalidProblem& e) {
      errors.push_back(std::string("params: ") + e.what());
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
}

ProblemPtr RunConfig::build_problem() const {
  return build_registry_problem(problem, params);
}

ControlProcess RunConfig::build_control(const ControlProblem& problem) const {
  if (control.type == "constant") {
    if (control.value.empty()) {
      return ControlProcess::constant(Vec::Zero(problem.m()));
    }
    std::vector<std::string> errors;
    check_fits(problem, control.value, "control.value", errors);
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return ControlProcess::constant(to_vec(control.value));
  }
  std::vector<std::string> errors;
  for (std::size_t i = 0; i < control.values.size(); ++i) {
    check_fits(problem, control.values[i],
               "control.values[" + std::to_string(i) + "]", errors);
  }
  if (control.values.size() != control.breaks.size() + 1) {
    errors.push_back(
        "control.values: need one more value than there are breaks");
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  const TimeGrid grid(problem.horizon(), numerics.steps);
  std::vector<Vec> per_step;
  per_step.reserve(numerics.steps);
  for (std::size_t k = 0; k < numerics.steps; ++k) {
    const double t = grid.time(k);
    const auto piece = static_cast<std::size_t>(
        std::upper_bound(control.breaks.begin(), control.breaks.end(), t) -
        control.breaks.begin());
    per_step.push_back(to_vec(control.values[piece]));
  }
  return ControlProcess::schedule(std::move(per_step));
}

ControlProcess RunConfig::build_replacement(
    const ControlProblem& problem) const {
  std::vector<std::string> errors;
  if (spike.replacement.empty()) {
    errors.push_back("spike.replacement: required for spike runs");
  } else {
    check_fits(problem, spike.replacement, "spike.replacement", errors);
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return ControlProcess::constant(to_vec(spike.replacement));
}

std::vector<Vec> RunConfig::build_region(const ControlProblem& problem) const {
  if (condition.region.empty()) return problem.control_set().evaluation_grid();
  std::vector<Vec> out;
  for (const auto& v : condition.region) out.push_back(to_vec(v));
  return out;
}

RegressionOptions RunConfig::regression() const {
  RegressionOptions out;
  out.degree = numerics.degree;
  out.ridge = numerics.ridge;
  out.multistep = numerics.multistep;
  return out;
}

CheckOptions RunConfig::check_options() const {
  CheckOptions out;
  out.tolerance = condition.tolerance;
  out.relative_tolerance = condition.relative_tolerance;
  out.flat_fraction = condition.flat_fraction;
  out.node_stride = condition.node_stride;
  return out;
}

TaylorOptions RunConfig::taylor_options() const {
  TaylorOptions out;
  out.ladder = spike.ladder;
  out.anchor = spike.anchor;
  out.cost_first = spike.cost_first;
  out.cost_second = spike.cost_second;
  out.regression = regression();
  return out;
}

ValidationOptions RunConfig::validation_options() const {
  ValidationOptions out;
  out.samples = validation.samples;
  out.seed = validation.seed;
  out.radius = validation.radius;
  return out;
}

nlohmann::json to_json(const RunConfig& c) {
  json control{{"type", c.control.type}};
  if (c.control.type == "constant") {
    control["value"] = c.control.value;
  } else {
    control["breaks"] = c.control.breaks;
    control["values"] = c.control.values;
  }
  json windows = json::array();
  for (const auto& [a, b] : c.spike.windows) windows.push_back({a, b});
  return {
      {"problem", c.problem},
      {"params", c.params},
      {"control", std::move(control)},
      {"numerics",
       {{"steps", c.numerics.steps},
        {"paths", c.numerics.paths},
        {"seed", c.numerics.seed},
        {"workers", c.numerics.workers},
        {"degree", c.numerics.degree},
        {"ridge", c.numerics.ridge},
        {"multistep", c.numerics.multistep}}},
      {"condition",
       {{"region", c.condition.region},
        {"tolerance", c.condition.tolerance},
        {"relative_tolerance", c.condition.relative_tolerance},
        {"flat_fraction", c.condition.flat_fraction},
        {"node_stride", c.condition.node_stride},
        {"replicates", c.condition.replicates}}},
      {"spike",
       {{"replacement", c.spike.replacement},
        {"ladder", c.spike.ladder},
        {"anchor", c.spike.anchor},
        {"windows", std::move(windows)},
        {"cost_first", c.spike.cost_first},
        {"cost_second", c.spike.cost_second}}},
      {"validation",
       {{"samples", c.validation.samples},
        {"seed", c.validation.seed},
        {"radius", c.validation.radius}}},
      {"output", {{"dir", c.output.dir}}},
  };
}

RunConfig config_from_json(const nlohmann::json& doc) {
  RunConfig c;
  std::vector<std::string> errors;
  {
    Reader r(doc, "", errors);
    if (!doc.is_object()) throw ConfigError(std::move(errors));
    r.read("problem", c.problem);
    if (const json* p = r.get("params")) {
      if (p->is_object()) c.params = *p;
      else r.fail("params", "must be an object");
    }
    for (const char* key : {"control", "numerics", "condition", "spike",
                            "validation", "output"}) {
      r.get(key);
    }
  }
  {
    Reader r(section(doc, "control"), "control", errors);
    r.read("type", c.control.type);
    r.read("value", c.control.value);
    r.read("breaks", c.control.breaks);
    r.read("values", c.control.values);
  }
  {
    Reader r(section(doc, "numerics"), "numerics", errors);
    r.read_int("steps", c.numerics.steps);
    r.read_int("paths", c.numerics.paths);
    r.read_int("seed", c.numerics.seed);
    r.read_int("workers", c.numerics.workers);
    r.read_int("degree", c.numerics.degree);
    r.read("ridge", c.numerics.ridge);
    r.read("multistep", c.numerics.multistep);
  }
  {
    Reader r(section(doc, "condition"), "condition", errors);
    r.read("region", c.condition.region);
    r.read("tolerance", c.condition.tolerance);
    r.read("relative_tolerance", c.condition.relative_tolerance);
    r.read("flat_fraction", c.condition.flat_fraction);
    r.read_int("node_stride", c.condition.node_stride);
    r.read_int("replicates", c.condition.replicates);
  }
  {
    Reader r(section(doc, "spike"), "spike", errors);
    r.read("replacement", c.spike.replacement);
    r.read("ladder", c.spike.ladder);
    r.read("anchor", c.spike.anchor);
    std::vector<std::vector<double>> windows;
    r.read("windows", windows);
    c.spike.windows.clear();
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (windows[i].size() != 2) {
        errors.push_back("spike.windows[" + std::to_string(i) +
                         "]: expected [start, end]");
        continue;
      }
      c.spike.windows.emplace_back(windows[i][0], windows[i][1]);
    }
    r.read("cost_first", c.spike.cost_first);
    r.read("cost_second", c.spike.cost_second);
  }
  {
    Reader r(section(doc, "validation"), "validation", errors);
    r.read_int("samples", c.validation.samples);
    r.read_int("seed", c.validation.seed);
    r.read("radius", c.validation.radius);
  }
  {
    Reader r(section(doc, "output"), "output", errors);
    r.read("dir", c.output.dir);
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

std::string resolve_config_path(const std::string& name) {
  namespace fs = std::filesystem;
  std::vector<fs::path> candidates{fs::path(name)};
  const fs::path given(name);
  if (given.is_relative()) {
    if (const char* dir = std::getenv(kConfigDirEnv); dir && *dir) {
      candidates.push_back(fs::path(dir) / given);
      candidates.push_back(fs::path(dir) / (name + ".json"));
    }
  }
  std::error_code ec;
  for (const auto& c : candidates) {
    if (fs::is_regular_file(c, ec)) return c.string();
  }
  throw InvalidArgument("config '" + name + "' not found (searched the path" +
                        std::string(" and $") + kConfigDirEnv + ")");
}

RunConfig load_config(const std::string& name) {
  return config_from_json(read_json_file(resolve_config_path(name)));
}

}  // namespace rsmp
