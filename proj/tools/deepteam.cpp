#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "deepteam/checks.hpp"
#include "deepteam/errors.hpp"
#include "deepteam/model_io.hpp"
#include "deepteam/schedule_io.hpp"
#include "deepteam/sim.hpp"

namespace fs = std::filesystem;
using namespace deepteam;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string model;
  std::vector<std::string> strategies;
  std::uint64_t seed = 0;
  int rollouts = 1000;
  std::string n_list = "4,16,64,256";
  std::string out;
  int workers = 0;
  int oracle_cap = kDefaultOracleCap;
  std::string record_level = "costs";
  std::string schedules;
  int models = 100;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<int> parse_n_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw UsageError("--n-list: '" + item + "' is not an integer");
    }
    if (used != item.size() || v < 2) throw UsageError("--n-list entries must be integers >= 2");
    out.push_back(v);
  }
  if (out.size() < 2) throw UsageError("--n-list needs at least two populations");
  return out;
}

TeamModel require_model(const Options& o) {
  if (o.model.empty()) throw UsageError("--model is required");
  return load_model(o.model);
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

fs::path prepare_out(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  fs::create_directories(o.out);
  return o.out;
}

void write_manifest(const fs::path& dir, const std::string& command, const Options& o,
                    const std::vector<std::string>& argv) {
  json m;
  m["tool"] = "deepteam";
  m["tool_version"] = DEEPTEAM_VERSION;
  m["command"] = command;
  m["argv"] = argv;
  m["model"] = o.model.empty() ? json(nullptr) : json(fs::absolute(o.model).string());
  m["strategy"] = o.strategies;
  m["seed"] = o.seed;
  m["num_rollouts"] = o.rollouts;
  m["n_list"] = command == "convergence" ? json(parse_n_list(o.n_list)) : json(nullptr);
  m["workers"] = o.workers;
  m["oracle_cap"] = o.oracle_cap;
  m["record_level"] = o.record_level;
  m["output_directory"] = fs::absolute(dir).string();
  m["timestamp"] = utc_timestamp();
  write_json(dir / "manifest.json", m);
}

int cmd_validate(const Options& o) {
  const TeamModel model = require_model(o);
  const ValidationReport report = validate(model);
  std::cout << report.violations.size() << " violations\n";
  for (const auto& v : report.violations) std::cout << "  " << v << '\n';
  return report.ok() ? kExitOk : kExitValidation;
}

int cmd_precompute(const Options& o, const std::vector<std::string>& argv) {
  const TeamModel model = require_model(o);
  const TeamSolution solution = solve_team(model);
  const fs::path dir = prepare_out(o);
  write_json(dir / "schedules.json", solution_to_json(solution));
  write_manifest(dir, "precompute", o, argv);
  std::cout << "wrote " << (dir / "schedules.json").string() << '\n';
  return kExitOk;
}

int cmd_simulate(Options o, const std::vector<std::string>& argv) {
  const TeamModel model = require_model(o);
  if (o.strategies.empty()) o.strategies.push_back("optimal");
  if (o.rollouts < 1) throw UsageError("--rollouts must be at least 1");
  RecordLevel level = RecordLevel::CostsOnly;
  if (o.record_level == "full") level = RecordLevel::FullTrace;
  else if (o.record_level != "costs") throw UsageError("--record-level must be costs or full");

  std::vector<StrategyKind> kinds;
  for (const auto& s : o.strategies) {
    try {
      kinds.push_back(parse_strategy(s, model.dims));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  const fs::path dir = prepare_out(o);
  const TeamSolution solution = solve_team(model);
  const RolloutEngine engine(model, solution);

  std::vector<Trace> all;
  json summary = json::array();
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    RolloutConfig cfg;
    cfg.seed = o.seed;
    cfg.num_rollouts = o.rollouts;
    cfg.strategy = kinds[k];
    cfg.record = level;
    cfg.workers = o.workers;
    std::vector<Trace> traces = engine.run(cfg);
    const CostEstimate est = evaluate_cost(traces);
    double split = 0.0;
    for (const auto& tr : traces) split = std::max(split, tr.max_cost_split_residual);
    std::cout << o.strategies[k] << ": mean cost " << format_double(est.mean) << " +- "
              << format_double(est.standard_error) << " (" << est.count << " rollouts)\n";
    summary.push_back({{"strategy", o.strategies[k]},
                       {"mean", est.mean},
                       {"standard_error", est.standard_error},
                       {"has_standard_error", est.has_standard_error},
                       {"rollouts", est.count},
                       {"max_cost_split_residual", split}});
    for (auto& tr : traces) all.push_back(std::move(tr));
  }
  write_costs_csv(dir / "costs.csv", all);
  if (level == RecordLevel::FullTrace) write_trace_csv(dir / "trace.csv", all);
  write_json(dir / "summary.json", summary);
  write_manifest(dir, "simulate", o, argv);
  return kExitOk;
}

int cmd_verify(const Options& o, const std::vector<std::string>& argv) {
  std::vector<CheckResult> results;
  auto append = [&](std::vector<CheckResult> r) {
    for (auto& x : r) results.push_back(std::move(x));
  };

  OracleSuiteOptions suite;
  suite.models = o.models;
  suite.seed = o.seed ? o.seed : suite.seed;
  suite.cap = o.oracle_cap;
  append(check_oracle_suite(suite));

  BruteForceOptions bf;
  bf.seed = suite.seed;
  bf.cap = o.oracle_cap;
  bf.workers = o.workers;
  append(check_optimality(reference_model_s1(2), "s1", bf));
  append(check_optimality(reference_model_s2(2), "s2", bf));

  SplitMixStream rng(suite.seed + 1);
  append({check_separation(random_team_model(rng), 100, suite.seed, o.workers)});
  const int grid[] = {4, 8, 16, 32, 64, 128, 256};
  append(check_sigma_bar_scaling(reference_model_s2(4), grid));
  append({check_other_agents_inverse(1000, suite.seed)});

  if (!o.model.empty()) {
    const TeamModel model = require_model(o);
    require_valid(model);
    if (model.n() * model.dims.dx <= o.oracle_cap)
      append(check_oracle_model(model, suite.seed, 20, o.oracle_cap));
    if (!o.schedules.empty()) results.push_back(check_schedule_roundtrip(model, load_solution(o.schedules)));
  } else if (!o.schedules.empty()) {
    throw UsageError("--schedules needs --model");
  }

  double split = 0.0;
  for (const auto& r : results) split = std::max(split, r.cost_split_residual);
  CheckResult decomposition;
  decomposition.name = "cost-decomposition";
  decomposition.observed = split;
  decomposition.tolerance = 1e-9;
  decomposition.passed = split <= 1e-9;
  decomposition.detail = "every simulated step of the checks above";
  results.push_back(decomposition);

  bool ok = true;
  json report;
  report["checks"] = json::array();
  for (const auto& r : results) {
    ok = ok && r.passed;
    report["checks"].push_back(check_to_json(r));
  }
  report["passed"] = ok;
  std::cout << report.dump(2) << '\n';
  if (!o.out.empty()) {
    const fs::path dir = prepare_out(o);
    write_json(dir / "verify.json", report);
    write_manifest(dir, "verify", o, argv);
  }
  return ok ? kExitOk : kExitNumerical;
}

int cmd_convergence(const Options& o, const std::vector<std::string>& argv) {
  const TeamModel family = require_model(o);
  const std::vector<int> ns = parse_n_list(o.n_list);
  if (o.rollouts < 2) throw UsageError("--rollouts must be at least 2");
  const fs::path dir = prepare_out(o);
  RolloutConfig cfg;
  cfg.seed = o.seed;
  cfg.num_rollouts = o.rollouts;
  cfg.workers = o.workers;
  const ConvergenceTable table = convergence_experiment(family, ns, cfg);
  write_convergence_csv(dir / "convergence.csv", table);
  json slopes = {{"max_sigma_bar", table.slope_max_sigma_bar},
                 {"ms_correction", table.slope_ms_correction},
                 {"cost_gap", table.slope_cost_gap},
                 {"max_cost_split_residual", table.max_cost_split_residual}};
  write_json(dir / "slopes.json", slopes);
  write_manifest(dir, "convergence", o, argv);
  std::cout << "n,max_sigma_bar,ms_correction,cost_gap,cost_gap_se\n";
  for (const auto& r : table.rows)
    std::cout << r.n << ',' << format_double(r.max_sigma_bar) << ',' << format_double(r.ms_correction)
              << ',' << format_double(r.cost_gap) << ',' << format_double(r.cost_gap_se) << '\n';
  std::cout << "slopes: max_sigma_bar " << format_double(table.slope_max_sigma_bar) << ", ms_correction "
            << format_double(table.slope_ms_correction) << ", cost_gap "
            << format_double(table.slope_cost_gap) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep structured LQG teams with imperfect deep state sharing", "deepteam"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DEEPTEAM_VERSION);
  Options o;

  auto model_opt = [&](CLI::App* c, bool required) {
    auto* opt = c->add_option("--model", o.model, "model JSON file");
    if (required) opt->required();
  };
  auto* validate_cmd = app.add_subcommand("validate", "check a model file");
  model_opt(validate_cmd, true);

  auto* precompute_cmd = app.add_subcommand("precompute", "write Riccati and filter schedules");
  model_opt(precompute_cmd, true);
  precompute_cmd->add_option("--out", o.out, "output directory")->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo rollouts");
  model_opt(simulate_cmd, true);
  simulate_cmd->add_option("--strategy", o.strategies, "optimal|meanfield|zero|custom:<file> (repeatable)");
  simulate_cmd->add_option("--seed", o.seed, "master seed");
  simulate_cmd->add_option("--rollouts", o.rollouts, "number of rollouts");
  simulate_cmd->add_option("--out", o.out, "output directory")->required();
  simulate_cmd->add_option("--workers", o.workers, "worker threads (0: all cores)");
  simulate_cmd->add_option("--record-level", o.record_level, "costs|full");

  auto* verify_cmd = app.add_subcommand("verify", "run the oracle suite");
  model_opt(verify_cmd, false);
  verify_cmd->add_option("--schedules", o.schedules, "schedules.json to compare bit for bit");
  verify_cmd->add_option("--seed", o.seed, "suite seed (0: default)");
  verify_cmd->add_option("--models", o.models, "number of random models")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--out", o.out, "output directory for verify.json");
  verify_cmd->add_option("--workers", o.workers, "worker threads (0: all cores)");
  verify_cmd->add_option("--oracle-cap", o.oracle_cap, "largest n*dx for the centralized oracle");

  auto* convergence_cmd = app.add_subcommand("convergence", "population sweep of the mean-field gap");
  model_opt(convergence_cmd, true);
  convergence_cmd->add_option("--n-list", o.n_list, "comma-separated populations");
  convergence_cmd->add_option("--seed", o.seed, "master seed");
  convergence_cmd->add_option("--rollouts", o.rollouts, "rollouts per population");
  convergence_cmd->add_option("--out", o.out, "output directory")->required();
  convergence_cmd->add_option("--workers", o.workers, "worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::vector<std::string> args(argv, argv + argc);
  try {
    if (*validate_cmd) return cmd_validate(o);
    if (*precompute_cmd) return cmd_precompute(o, args);
    if (*simulate_cmd) return cmd_simulate(o, args);
    if (*verify_cmd) return cmd_verify(o, args);
    if (*convergence_cmd) return cmd_convergence(o, args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ModelError& e) {
    std::cerr << "invalid model: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
