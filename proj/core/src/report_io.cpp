#include "rsmp/report_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "rsmp/errors.hpp"

namespace rsmp {
namespace {

// JSON has no inf/nan; they are written as strings.
Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

Json condition_record(const ConditionReport& report,
                      const ConditionRecord& r) {
  return {{"node", r.node},
          {"t", r.t},
          {"v", vec_json(report.controls[r.control])},
          {"mean", number(r.stat.value)},
          {"se", number(r.stat.se)},
          {"verdict", to_string(r.verdict)}};
}

Json vec_list(const std::vector<Vec>& vs) {
  Json out = Json::array();
  for (const auto& v : vs) out.push_back(vec_json(v));
  return out;
}

const char* kind_name(SingularityVerdict::Kind k) {
  switch (k) {
    case SingularityVerdict::Kind::kFullySingular:
      return "fully_singular";
    case SingularityVerdict::Kind::kPartiallySingular:
      return "partially_singular";
    case SingularityVerdict::Kind::kNonsingular:
      return "nonsingular";
  }
  return "nonsingular";
}

std::string csv_number(double v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

}  // namespace

Json estimate_json(const Estimate& e) {
  return {{"value", number(e.value)}, {"se", number(e.se)}};
}

Json exact_json(double value) {
  return {{"value", number(value)}, {"exact", true}};
}

Json vec_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

Json to_json(const ConditionReport& report) {
  Json out;
  out["order"] =
      report.order == ConditionReport::Order::kFirst ? "first" : "second";
  out["verdict"] = report.label();
  out["tolerance"] = exact_json(report.tolerance);
  out["max_abs_mean"] = number(report.max_abs_mean);
  if (!report.records.empty()) {
    out["min"] = condition_record(report, report.records[report.min_record]);
  }
  out["controls"] = vec_list(report.controls);
  Json nodes = Json::array();
  for (std::size_t i = 0; i < report.nodes.size(); ++i) {
    nodes.push_back({{"node", report.nodes[i]},
                     {"verdict", to_string(report.node_verdicts[i])}});
  }
  out["nodes"] = std::move(nodes);
  Json records = Json::array();
  for (const auto& r : report.records) {
    records.push_back(condition_record(report, r));
  }
  out["records"] = std::move(records);
  return out;
}

Json to_json(const SingularityVerdict& verdict) {
  Json out;
  out["classification"] = kind_name(verdict.classification);
  out["label"] = verdict.label();
  out["singular_on_region"] = verdict.singular_on_region;
  out["tolerance"] = exact_json(verdict.tolerance);
  out["region"] = vec_list(verdict.region);
  out["singular_set"] = vec_list(verdict.singular_set);
  Json grid = Json::array();
  for (const auto& s : verdict.grid_stats) {
    grid.push_back({{"v", vec_json(s.v)},
                    {"max_abs_mean", number(s.max_abs_mean)},
                    {"flat_fraction", number(s.flat_fraction)},
                    {"flat", s.flat},
                    {"is_reference", s.is_reference}});
  }
  out["grid"] = std::move(grid);
  return out;
}

Json to_json(const ValidationReport& report) {
  Json checks = Json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"bound", exact_json(c.bound)},
                      {"worst", exact_json(c.worst)},
                      {"pass", c.pass},
                      {"where", c.where}});
  }
  return {{"pass", report.pass},
          {"samples", report.samples},
          {"seed", report.seed},
          {"checks", std::move(checks)}};
}

Json to_json(const RateFit& fit) {
  Json levels = Json::array();
  for (std::size_t i = 0; i < fit.epsilons.size(); ++i) {
    levels.push_back(
        {{"epsilon", number(fit.epsilons[i])}, {"norm", number(fit.norms[i])}});
  }
  Json out{{"levels", std::move(levels)},
           {"used", fit.used},
           {"slope", number(fit.slope)},
           {"half_width", number(fit.half_width)},
           {"exact", fit.exact},
           {"warnings", fit.warnings}};
  return out;
}

Json to_json(const TaylorReport& report) {
  Json levels = Json::array();
  for (const auto& level : report.levels) {
    Json l;
    l["epsilon"] = number(level.epsilon);
    l["state"] = {{"x_dev8", estimate_json(level.state.dev8)},
                  {"x1_8", estimate_json(level.state.x1_8)},
                  {"x_first2", estimate_json(level.state.first2)},
                  {"x2_2", estimate_json(level.state.x2_2)},
                  {"x_second2", estimate_json(level.state.second2)}};
    if (level.cost_first) {
      l["cost_first"] = {{"y_first4", estimate_json(level.cost_first->y4)},
                         {"z_first2", estimate_json(level.cost_first->z2)},
                         {"y1_0", estimate_json(level.cost_first->y1_0)}};
    }
    if (level.cost_second) {
      l["cost_second"] = {{"y_second2", estimate_json(level.cost_second->y2)},
                          {"y2_0", estimate_json(level.cost_second->y2_0)}};
    }
    levels.push_back(std::move(l));
  }
  Json fits = Json::object();
  const auto& targets = rate_targets();
  for (const auto& [name, fit] : report.fits) {
    Json f = to_json(fit);
    if (auto it = targets.find(name); it != targets.end()) {
      f["target"] = {{"order", it->second.order},
                     {"little_o", it->second.little_o}};
    }
    fits[name] = std::move(f);
  }
  return {{"levels", std::move(levels)}, {"fits", std::move(fits)}};
}

Json to_json(const FieldDiff& diff) {
  return {{"field", diff.field},
          {"sup_node_rms", exact_json(diff.sup_node_rms)},
          {"rms", exact_json(diff.rms)},
          {"relative_rms", exact_json(diff.relative_rms)},
          {"mean_sup_squared", exact_json(diff.mean_sup_squared)},
          {"max_abs", exact_json(diff.max_abs)}};
}

Json to_json(const StabilityReport& report) {
  Json levels = Json::array();
  for (const auto& l : report.levels) {
    levels.push_back({{"delta", number(l.delta)},
                      {"perturbation_norm", number(l.perturbation_norm)},
                      {"difference_norm", number(l.difference_norm)},
                      {"ratio", number(l.ratio)},
                      {"pointwise_ratio", number(l.pointwise_ratio)},
                      {"zero_difference", l.zero_difference}});
  }
  return {{"levels", std::move(levels)},
          {"spread", number(report.spread)},
          {"pass", report.pass}};
}

void write_condition_csv(std::ostream& out, const ConditionReport& report) {
  const std::size_t m =
      report.controls.empty() ? 0 : static_cast<std::size_t>(report.controls[0].size());
  out << "node,t";
  for (std::size_t j = 0; j < m; ++j) out << ",v" << j;
  out << ",mean,se,verdict\n";
  for (const auto& r : report.records) {
    out << r.node << ',' << csv_number(r.t);
    const Vec& v = report.controls[r.control];
    for (std::size_t j = 0; j < m; ++j) {
      out << ',' << csv_number(v(static_cast<Eigen::Index>(j)));
    }
    out << ',' << csv_number(r.stat.value) << ',' << csv_number(r.stat.se)
        << ',' << to_string(r.verdict) << '\n';
  }
}

void write_rate_csv(std::ostream& out, const TaylorReport& report) {
  out << "residual,epsilon,norm,se,slope,half_width,exact\n";
  for (const auto& [name, fit] : report.fits) {
    for (std::size_t i = 0; i < fit.epsilons.size(); ++i) {
      const Estimate* est = nullptr;
      const auto& level = report.levels[i];
      if (name == "x_dev8") est = &level.state.dev8;
      if (name == "x1_8") est = &level.state.x1_8;
      if (name == "x_first2") est = &level.state.first2;
      if (name == "x2_2") est = &level.state.x2_2;
      if (name == "x_second2") est = &level.state.second2;
      if (name == "y_first4" && level.cost_first) est = &level.cost_first->y4;
      if (name == "z_first2" && level.cost_first) est = &level.cost_first->z2;
      if (name == "y_second2" && level.cost_second) {
        est = &level.cost_second->y2;
      }
      out << name << ',' << csv_number(fit.epsilons[i]) << ','
          << csv_number(fit.norms[i]) << ','
          << (est ? csv_number(est->se) : std::string("nan")) << ','
          << csv_number(fit.slope) << ',' << csv_number(fit.half_width) << ','
          << (fit.exact ? "true" : "false") << '\n';
    }
  }
}

void write_json_file(const std::string& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error("malformed JSON in '" + path + "': " + e.what());
  }
}

}  // namespace rsmp
