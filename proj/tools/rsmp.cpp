// rsmp: command-line driver for simulation, condition checks, spike
// variation ladders and the example reproductions.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rsmp/brownian.hpp"
#include "rsmp/bsde.hpp"
#include "rsmp/config.hpp"
#include "rsmp/errors.hpp"
#include "rsmp/maximum_principle.hpp"
#include "rsmp/oracles.hpp"
#include "rsmp/report_io.hpp"
#include "rsmp/reproduce.hpp"
#include "rsmp/sde.hpp"
#include "rsmp/spike.hpp"
#include "rsmp/validation.hpp"

namespace {

using rsmp::Json;

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kFlagged = 2;

struct Overrides {
  std::string config;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> paths;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<double> tolerance;
};

rsmp::RunConfig resolve(const Overrides& o) {
  rsmp::RunConfig c =
      o.config.empty() ? rsmp::RunConfig{} : rsmp::load_config(o.config);
  if (o.steps) c.numerics.steps = *o.steps;
  if (o.paths) c.numerics.paths = *o.paths;
  if (o.seed) c.numerics.seed = *o.seed;
  if (o.workers) c.numerics.workers = *o.workers;
  if (o.out) c.output.dir = *o.out;
  if (o.tolerance) c.condition.tolerance = *o.tolerance;
  c.validate();
  std::error_code ec;
  std::filesystem::create_directories(c.output.dir, ec);
  if (ec) {
    throw rsmp::ConfigError(
        {"output.dir: cannot create '" + c.output.dir + "': " + ec.message()});
  }
  return c;
}

std::string out_path(const rsmp::RunConfig& c, const std::string& file) {
  return (std::filesystem::path(c.output.dir) / file).string();
}

void write_text(const std::string& path,
                const std::function<void(std::ostream&)>& fill) {
  std::ofstream out(path);
  if (!out) throw rsmp::Error("cannot open '" + path + "' for writing");
  fill(out);
}

// Shared envelope of every report.
class Session {
 public:
  Session(std::string command, const rsmp::RunConfig& config)
      : command_(std::move(command)),
        config_(config),
        start_(std::chrono::steady_clock::now()) {}

  void emit(Json result, const std::string& file) const {
    const double wall = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start_)
                            .count();
    Json doc{{"tool", "rsmp"},
             {"version", RSMP_VERSION},
             {"command", command_},
             {"config", rsmp::to_json(config_)},
             {"provenance",
              {{"seed", config_.numerics.seed},
               {"workers", config_.numerics.workers},
               {"wall_seconds", wall}}},
             {"result", std::move(result)}};
    const std::string path = out_path(config_, file);
    rsmp::write_json_file(path, doc);
    std::cout << "wrote " << path << "\n";
  }

 private:
  std::string command_;
  rsmp::RunConfig config_;
  std::chrono::steady_clock::time_point start_;
};

struct Setup {
  rsmp::ProblemPtr problem;
  rsmp::ControlProcess ubar;
  rsmp::Executor exec;
  rsmp::PathBatch noise;
};

Setup prepare(const rsmp::RunConfig& c) {
  auto problem = c.build_problem();
  auto ubar = c.build_control(*problem);
  rsmp::Executor exec(c.numerics.workers);
  const rsmp::TimeGrid grid(problem->horizon(), c.numerics.steps);
  auto noise = rsmp::sample_brownian(grid, c.numerics.paths, problem->d(),
                                     c.numerics.seed, exec);
  return {std::move(problem), std::move(ubar), std::move(exec),
          std::move(noise)};
}

int cmd_simulate(const rsmp::RunConfig& c) {
  Session session("simulate", c);
  Setup s = prepare(c);
  const auto states = rsmp::euler_forward(*s.problem, s.ubar, s.noise, s.exec);
  const auto cost = rsmp::solve_cost_bsde(*s.problem, states, s.noise,
                                          c.regression(), s.exec);
  Json result{{"problem", s.problem->name()},
              {"params", s.problem->params()},
              {"steps", c.numerics.steps},
              {"paths", c.numerics.paths},
              {"y0", rsmp::estimate_json(cost.y0)},
              {"admissibility_norm",
               rsmp::exact_json(rsmp::admissibility_norm(states.u))}};
  if (s.problem->name() == "example1" && c.control.type == "constant") {
    const auto& p = s.problem->params();
    const double u = s.ubar.value(0, 0.0, s.problem->initial_state())[0];
    const rsmp::Example1Oracle oracle{p.at("a").get<double>(),
                                      p.at("beta").get<double>(),
                                      p.at("gamma").get<double>(),
                                      s.problem->horizon()};
    const auto exact = rsmp::example1_paths(oracle, s.noise, u);
    result["oracle"] = rsmp::to_json(rsmp::oracle_diff("x", states.x, exact.x));
  }
  std::cout << "J(u) = y0 = " << cost.y0.value << " +- " << cost.y0.se
            << "\n";
  session.emit(std::move(result), "simulate.json");
  return kOk;
}

int cmd_check_first(const rsmp::RunConfig& c) {
  Session session("check-first", c);
  Setup s = prepare(c);
  auto ref = rsmp::solve_reference(*s.problem, s.ubar, s.noise,
                                   c.regression(), s.exec, false, false);
  rsmp::attach_replicates(*s.problem, s.ubar, ref, c.condition.replicates,
                          c.regression(), s.exec);
  const auto report =
      rsmp::first_order_check(*s.problem, ref, c.check_options(), s.exec);
  write_text(out_path(c, "condition_first.csv"), [&](std::ostream& out) {
    rsmp::write_condition_csv(out, report);
  });
  std::cout << "first-order condition: " << report.label()
            << " (max |E dH| " << report.max_abs_mean << ", tolerance "
            << report.tolerance << ")\n";
  session.emit({{"y0", rsmp::estimate_json(ref.cost.y0)},
                {"condition", rsmp::to_json(report)}},
               "check_first.json");
  return report.verdict == rsmp::Verdict::kViolated ? kFlagged : kOk;
}

int cmd_classify(const rsmp::RunConfig& c) {
  Session session("classify", c);
  Setup s = prepare(c);
  auto ref = rsmp::solve_reference(*s.problem, s.ubar, s.noise,
                                   c.regression(), s.exec, false, false);
  rsmp::attach_replicates(*s.problem, s.ubar, ref, c.condition.replicates,
                          c.regression(), s.exec);
  const auto verdict = rsmp::singularity_classify(
      *s.problem, ref, c.build_region(*s.problem), c.check_options(), s.exec);
  std::cout << "classification: " << verdict.label() << ", singular on V: "
            << (verdict.singular_on_region ? "yes" : "no") << "\n";
  session.emit({{"singularity", rsmp::to_json(verdict)}}, "classify.json");
  return kOk;
}

int cmd_check_second(const rsmp::RunConfig& c) {
  Session session("check-second", c);
  Setup s = prepare(c);
  auto ref = rsmp::solve_reference(*s.problem, s.ubar, s.noise,
                                   c.regression(), s.exec, true, false);
  rsmp::attach_replicates(*s.problem, s.ubar, ref, c.condition.replicates,
                          c.regression(), s.exec);
  const auto verdict = rsmp::singularity_classify(
      *s.problem, ref, c.build_region(*s.problem), c.check_options(), s.exec);
  const auto report = rsmp::second_order_check(*s.problem, ref, verdict,
                                               c.check_options(), s.exec);
  write_text(out_path(c, "condition_second.csv"), [&](std::ostream& out) {
    rsmp::write_condition_csv(out, report);
  });
  std::cout << "second-order condition: " << report.label() << " (min E S "
            << report.min_mean << ", tolerance " << report.tolerance << ")\n";
  session.emit({{"singularity", rsmp::to_json(verdict)},
                {"condition", rsmp::to_json(report)}},
               "check_second.json");
  return report.verdict == rsmp::Verdict::kViolated ? kFlagged : kOk;
}

int cmd_taylor(const rsmp::RunConfig& c) {
  Session session("taylor", c);
  Setup s = prepare(c);
  const auto replacement = c.build_replacement(*s.problem);
  rsmp::TaylorOptions options = c.taylor_options();
  auto ref = rsmp::solve_reference(*s.problem, s.ubar, s.noise,
                                   c.regression(), s.exec,
                                   options.cost_second, false);
  Json notes = Json::array();
  std::optional<rsmp::SingularityVerdict> verdict;
  if (options.cost_second) {
    rsmp::attach_replicates(*s.problem, s.ubar, ref, c.condition.replicates,
                            c.regression(), s.exec);
    verdict = rsmp::singularity_classify(*s.problem, ref,
                                         c.build_region(*s.problem),
                                         c.check_options(), s.exec);
    const rsmp::Vec v = replacement.constant_value();
    const bool flat = std::any_of(
        verdict->singular_set.begin(), verdict->singular_set.end(),
        [&](const rsmp::Vec& w) { return (w - v).norm() <= 1e-12; });
    if (!flat) {
      options.cost_second = false;
      notes.push_back(
          "second-order cost residual skipped: the replacement is not in "
          "the singular set");
    }
  }
  const auto report = rsmp::taylor_ladder(
      *s.problem, ref, s.ubar, replacement, options,
      verdict ? &*verdict : nullptr, s.exec);
  write_text(out_path(c, "rates.csv"), [&](std::ostream& out) {
    rsmp::write_rate_csv(out, report);
  });
  for (const auto& [name, fit] : report.fits) {
    std::cout << name << ": "
              << (fit.exact ? std::string("exact")
                            : std::to_string(fit.slope) + " +- " +
                                  std::to_string(fit.half_width))
              << "\n";
  }
  session.emit({{"taylor", rsmp::to_json(report)}, {"notes", notes}},
               "taylor.json");
  return kOk;
}

int cmd_validate(const rsmp::RunConfig& c) {
  Session session("validate", c);
  auto problem = c.build_problem();
  const auto ubar = c.build_control(*problem);
  rsmp::Executor exec(c.numerics.workers);
  const auto report =
      rsmp::validate_problem(*problem, c.validation_options(), exec);
  const rsmp::TimeGrid grid(problem->horizon(), c.numerics.steps);
  const auto noise = rsmp::sample_brownian(
      grid, std::min<std::size_t>(c.numerics.paths, 256), problem->d(),
      c.numerics.seed, exec);
  const auto states = rsmp::euler_forward(*problem, ubar, noise, exec);
  for (const auto& check : report.checks) {
    std::cout << (check.pass ? "ok   " : "FAIL ") << check.name << ": worst "
              << check.worst << " bound " << check.bound << "\n";
  }
  session.emit({{"validation", rsmp::to_json(report)},
                {"admissibility_norm",
                 rsmp::exact_json(rsmp::admissibility_norm(states.u))}},
               "validate.json");
  return report.pass ? kOk : kFlagged;
}

int cmd_reproduce(const std::string& example, const Overrides& o) {
  rsmp::AcceptanceOptions options;
  if (o.workers) options.workers = *o.workers;
  if (options.workers < 1) {
    throw rsmp::ConfigError({"numerics.workers: must be positive"});
  }
  const std::string dir = o.out.value_or(".");
  std::filesystem::create_directories(dir);
  const auto start = std::chrono::steady_clock::now();
  const auto report = rsmp::reproduce_example(example, options);
  for (const auto& c : report.criteria) {
    std::cout << rsmp::format_line(c) << "\n";
  }
  const double wall = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  Json doc{{"tool", "rsmp"},
           {"version", RSMP_VERSION},
           {"command", "reproduce"},
           {"config", {{"example", example}, {"workers", options.workers}}},
           {"provenance",
            {{"seed", "frozen"},
             {"workers", options.workers},
             {"wall_seconds", wall}}},
           {"result", rsmp::to_json(report)}};
  std::string file = "reproduce_" + example + ".json";
  std::replace(file.begin(), file.end(), '+', 'p');
  std::replace(file.begin(), file.end(), '-', 'm');
  const std::string path = (std::filesystem::path(dir) / file).string();
  rsmp::write_json_file(path, doc);
  std::cout << "wrote " << path << "\n";
  return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic maximum principle checks for recursive-utility "
               "control problems"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config,
                 "Config file; relative names are also looked up in "
                 "$RSMP_CONFIG_DIR");
  app.add_option("--steps", o.steps, "Time steps N")
      ->check(CLI::PositiveNumber);
  app.add_option("--paths", o.paths, "Monte Carlo paths M")
      ->check(CLI::Range(2ul, std::numeric_limits<std::size_t>::max()));
  app.add_option("--seed", o.seed, "Brownian seed");
  app.add_option("--workers", o.workers, "Worker threads")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--tolerance", o.tolerance,
                 "Condition tolerance (negative: automatic)");

  std::function<int()> run;
  auto add = [&](const char* name, const char* help,
                 int (*fn)(const rsmp::RunConfig&)) {
    app.add_subcommand(name, help)->fallthrough()->callback(
        [&, fn] { run = [&, fn] { return fn(resolve(o)); }; });
  };
  add("simulate", "Forward state and cost BSDE: J(u) = y0", cmd_simulate);
  add("check-first", "First-order condition table", cmd_check_first);
  add("check-second", "Singularity classification and second-order table",
      cmd_check_second);
  add("classify", "Singularity classification", cmd_classify);
  add("taylor", "Spike-variation residual ladder and rate fits", cmd_taylor);
  add("validate", "Sampling check of the standing assumptions", cmd_validate);

  std::string example;
  auto* reproduce =
      app.add_subcommand("reproduce", "Acceptance pipeline for one example");
  reproduce->fallthrough();
  reproduce->add_option("example", example, "example1, example2+ or example2-")
      ->required()
      ->check(CLI::IsMember({"example1", "example2+", "example2-"}));
  reproduce->callback([&] { run = [&] { return cmd_reproduce(example, o); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kError;
  }
  try {
    return run();
  } catch (const rsmp::ConfigError& e) {
    std::cerr << "rsmp: " << e.what() << "\n";
  } catch (const rsmp::PreconditionError& e) {
    std::cerr << "rsmp: precondition failed: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "rsmp: " << e.what() << "\n";
  }
  return kError;
}
