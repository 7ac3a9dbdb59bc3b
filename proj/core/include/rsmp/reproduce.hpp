#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rsmp {

/// Outcome of one acceptance criterion.
struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  /// One line for humans.
  std::string detail;
  nlohmann::json metrics = nlohmann::json::object();
  double seconds = 0.0;
};

struct AcceptanceOptions {
  int workers = 1;
  /// Randomized cases per invariant property.
  int invariant_cases = 100;
};

CriterionResult criterion_state_oracle(const AcceptanceOptions& options = {});
CriterionResult criterion_adjoint_oracle(const AcceptanceOptions& options = {});
CriterionResult criterion_example1_verdicts(
    const AcceptanceOptions& options = {});
CriterionResult criterion_example2_signs(const AcceptanceOptions& options = {});
CriterionResult criterion_taylor_orders(const AcceptanceOptions& options = {});
CriterionResult criterion_duality(const AcceptanceOptions& options = {});
CriterionResult criterion_invariants(const AcceptanceOptions& options = {});
CriterionResult criterion_stability(const AcceptanceOptions& options = {});

/// All eight criteria in order.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options = {});

/// "PASS [3] example1 verdicts: ..." style line.
std::string format_line(const CriterionResult& result);
nlohmann::json to_json(const CriterionResult& result);

/// Example 2 second-order check for one sign; the s = -1 run also checks
/// E S(0, +-1) against its frozen thresholds.
CriterionResult example2_sign_check(int sign,
                                    const AcceptanceOptions& options = {});

struct ReproduceReport {
  std::string example;
  /// Verdict labels of the checks that ran, e.g. "candidate".
  std::vector<std::string> verdicts;
  std::vector<CriterionResult> criteria;

  bool all_pass() const;
  /// 0 when every criterion passes and no verdict is violated/excluded, else
  /// 2.
  int exit_code() const;
};

/// "example1", "example2+" or "example2-"; throws InvalidArgument otherwise.
ReproduceReport reproduce_example(const std::string& example,
                                  const AcceptanceOptions& options = {});
nlohmann::json to_json(const ReproduceReport& report);

}  // namespace rsmp
