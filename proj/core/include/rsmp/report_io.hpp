#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsmp/bsde.hpp"
#include "rsmp/maximum_principle.hpp"
#include "rsmp/oracles.hpp"
#include "rsmp/spike.hpp"
#include "rsmp/stats.hpp"
#include "rsmp/validation.hpp"

namespace rsmp {

using Json = nlohmann::json;

/// {"value", "se"}.
Json estimate_json(const Estimate& e);
/// {"value", "exact": true}.
Json exact_json(double value);
Json vec_json(const Vec& v);

Json to_json(const ConditionReport& report);
Json to_json(const SingularityVerdict& verdict);
Json to_json(const ValidationReport& report);
Json to_json(const RateFit& fit);
Json to_json(const TaylorReport& report);
Json to_json(const FieldDiff& diff);
Json to_json(const StabilityReport& report);

/// node,t,v0..v{m-1},mean,se,verdict
void write_condition_csv(std::ostream& out, const ConditionReport& report);
/// residual,epsilon,norm,se,slope,half_width,exact
void write_rate_csv(std::ostream& out, const TaylorReport& report);

/// Writes `doc` to path with a trailing newline; throws Error on failure.
void write_json_file(const std::string& path, const Json& doc);
Json read_json_file(const std::string& path);

}  // namespace rsmp
