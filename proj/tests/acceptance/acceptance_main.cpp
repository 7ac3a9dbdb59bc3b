// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is 0 only when every selected criterion passes.

#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rsmp/report_io.hpp"
#include "rsmp/reproduce.hpp"

int main(int argc, char** argv) {
  CLI::App app{"rsmp acceptance criteria"};
  int workers = 1;
  std::vector<int> only;
  std::string json_path;
  app.add_option("--workers", workers, "worker threads")
      ->check(CLI::PositiveNumber);
  app.add_option("--only", only, "criterion ids to run")
      ->check(CLI::Range(1, 8));
  app.add_option("--json", json_path, "write results as JSON");
  CLI11_PARSE(app, argc, argv);

  rsmp::AcceptanceOptions options;
  options.workers = workers;
  using Criterion =
      std::function<rsmp::CriterionResult(const rsmp::AcceptanceOptions&)>;
  const std::vector<std::pair<int, Criterion>> criteria = {
      {1, rsmp::criterion_state_oracle},
      {2, rsmp::criterion_adjoint_oracle},
      {3, rsmp::criterion_example1_verdicts},
      {4, rsmp::criterion_example2_signs},
      {5, rsmp::criterion_taylor_orders},
      {6, rsmp::criterion_duality},
      {7, rsmp::criterion_invariants},
      {8, rsmp::criterion_stability}};
  const std::set<int> selected(only.begin(), only.end());

  bool all_pass = true;
  rsmp::Json results = rsmp::Json::array();
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && !selected.contains(id)) continue;
    const rsmp::CriterionResult r = run(options);
    std::cout << rsmp::format_line(r) << std::endl;
    all_pass = all_pass && r.pass;
    results.push_back(rsmp::to_json(r));
  }
  std::cout << (all_pass ? "ALL PASS" : "SOME CRITERIA FAILED") << std::endl;
  if (!json_path.empty()) {
    rsmp::write_json_file(json_path,
                          {{"all_pass", all_pass}, {"criteria", results}});
  }
  return all_pass ? 0 : 1;
}
