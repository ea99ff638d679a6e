// rdgcc: validate, synthesize, verify and simulate decentralized controllers from JSON system files.

#include "rdgcc/errors.hpp"
#include "rdgcc/fixtures.hpp"
#include "rdgcc/io.hpp"
#include "rdgcc/sim.hpp"
#include "rdgcc/synthesis.hpp"
#include "rdgcc/verify.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace rdgcc;

namespace {

enum Exit { kOk = 0, kInput = 1, kInfeasible = 2, kVerification = 3, kInternal = 4 };

struct Settings {
  std::string input;
  std::string out;
  std::string mode = "reliable";
  double epsilon = 1e-6;
  double tolerance = 1e-8;
  int grid_samples = 50;
  int mc_samples = 500;
  double horizon = 20.0;
  double step = 1e-3;
  std::uint64_t seed = 0;
  bool optimize_trace = false;
  bool parameter_independent = false;
  std::string trajectory;
};

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Json parse(const std::string& text, const std::string& path) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

SynthesisOptions synthesis_options(const Settings& s) {
  SynthesisOptions o;
  o.strictness = s.epsilon;
  o.solver.tolerance = s.tolerance;
  o.optimize_trace = s.optimize_trace;
  o.parameter_independent = s.parameter_independent;
  return o;
}

int threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

void emit(const Json& doc, const std::string& path) {
  if (path.empty())
    std::cout << dump(doc);
  else
    write_text_file(path, dump(doc));
}

SynthesisResult run_synthesis(const SystemSpec& spec, SynthesisMode mode, const SynthesisOptions& options) {
  if (mode == SynthesisMode::Stability) return synthesize_stabilizing(spec.system, options);
  if (!spec.has_cost) throw InputError("reliable mode needs a 'cost' section in the system file");
  return synthesize_reliable_gcc(spec.system, spec.cost, spec.failures, options);
}

std::string summary(const SynthesisResult& result) {
  std::ostringstream os;
  os << "mode " << to_string(result.mode) << ": " << (result.feasible() ? "feasible" : "infeasible") << '\n';
  for (const auto& sub : result.subsystems) {
    os << "  subsystem " << sub.index << ": " << to_string(sub.status) << ", margin " << sub.margin;
    if (sub.ok()) os << ", |K| " << sub.K.norm();
    os << '\n';
  }
  if (result.mode == SynthesisMode::ReliableGcc && result.feasible())
    os << "  expected cost bound max_k sum_i tr(X_ik) = " << expected_cost_bound(result) << '\n';
  return os.str();
}

VerificationReport run_verification(const SynthesisResult& result, const SystemSpec& spec, const Settings& s) {
  GridOptions grid;
  grid.interior_samples = s.grid_samples;
  grid.seed = s.seed;
  if (result.mode == SynthesisMode::ReliableGcc)
    return verify_closed_loop(result, spec.system, &spec.cost, &spec.failures, grid);
  return verify_closed_loop(result, spec.system, nullptr, nullptr, grid);
}

MonteCarloConfig monte_carlo_config(const Settings& s) {
  MonteCarloConfig config;
  config.samples = s.mc_samples;
  config.horizon = s.horizon;
  config.step = s.step;
  config.seed = s.seed;
  config.threads = threads();
  return config;
}

std::string monte_carlo_line(const MonteCarloSummary& mc) {
  std::ostringstream os;
  os << "monte carlo: " << mc.samples.size() << " samples, " << mc.violations.size() << " violations, "
     << mc.tail_flags.size() << " tail flags, max surrogate/bound " << mc.max_ratio << ", "
     << mc.invariant_violations << " invariant violations\n";
  return os.str();
}

struct LoadedResult {
  SystemSpec spec;
  SynthesisResult result;
  std::string sha256;
};

LoadedResult load_result(const std::string& path) {
  const std::string bytes = read_bytes(path);
  const Json doc = parse(bytes, path);
  if (!doc.is_object() || !doc.contains("input") || !doc.contains("result"))
    throw InputError("'" + path + "' is not a synthesis result file (needs 'input' and 'result')");
  return {system_from_json(doc.at("input")), result_from_json(doc.at("result")), sha256_hex(bytes)};
}

int cmd_validate(const Settings& s) {
  const std::string bytes = read_bytes(s.input);
  const SystemSpec spec = system_from_json(parse(bytes, s.input));
  const auto mode = synthesis_mode_from_string(s.mode);
  ValidationReport report;
  if (mode == SynthesisMode::ReliableGcc && spec.has_cost)
    report = validate_system(spec.system, spec.cost, spec.failures);
  else
    report = validate_structure(spec.system);
  if (mode == SynthesisMode::ReliableGcc && !spec.has_cost)
    report.issues.push_back({IssueSeverity::ReliableUnavailable, "cost-missing", -1, -1,
                             "no cost section; reliable synthesis unavailable"});
  std::cout << (report.empty() ? "no issues\n" : report.to_string());
  Json issues = Json::array();
  for (const auto& issue : report.issues)
    issues.push_back({{"severity", issue.severity == IssueSeverity::Violation ? "violation" : "reliable-unavailable"},
                      {"code", issue.code},
                      {"subsystem", issue.subsystem},
                      {"source", issue.source},
                      {"message", issue.message}});
  const bool ok = mode == SynthesisMode::ReliableGcc ? report.reliable_ok() : report.stability_ok();
  if (!s.out.empty())
    emit({{"provenance", provenance(sha256_hex(bytes), s.seed)}, {"mode", s.mode}, {"ok", ok}, {"issues", issues}},
         s.out);
  return ok ? kOk : kInput;
}

int cmd_synthesize(const Settings& s) {
  const std::string bytes = read_bytes(s.input);
  const SystemSpec spec = system_from_json(parse(bytes, s.input));
  const auto result = run_synthesis(spec, synthesis_mode_from_string(s.mode), synthesis_options(s));
  std::cout << summary(result);
  emit({{"provenance", provenance(sha256_hex(bytes), s.seed)}, {"input", to_json(spec)}, {"result", to_json(result)}},
       s.out);
  return result.feasible() ? kOk : kInfeasible;
}

int cmd_verify(const Settings& s) {
  const auto loaded = load_result(s.input);
  if (!loaded.result.feasible()) {
    std::cout << "result is infeasible; nothing to verify\n";
    return kInfeasible;
  }
  const auto report = run_verification(loaded.result, loaded.spec, s);
  std::cout << report.checks.size() << " checks, " << report.failures() << " failures\n";
  for (const auto& [category, worst] : report.worst_by_category())
    std::cout << "  " << category << ": worst " << worst << '\n';
  emit({{"provenance", provenance(loaded.sha256, s.seed)}, {"report", to_json(report)}}, s.out);
  return report.passed() ? kOk : kVerification;
}

int cmd_simulate(const Settings& s) {
  const auto loaded = load_result(s.input);
  if (loaded.result.mode != SynthesisMode::ReliableGcc)
    throw InputError("simulate needs a reliable-mode result (the cost bound is what gets tested)");
  if (!loaded.result.feasible()) {
    std::cout << "result is infeasible; nothing to simulate\n";
    return kInfeasible;
  }
  const auto mc = monte_carlo_cost(loaded.result, loaded.spec.system, loaded.spec.cost, loaded.spec.failures,
                                   monte_carlo_config(s));
  std::cout << monte_carlo_line(mc);
  if (!s.trajectory.empty()) {
    const auto L = loaded.spec.system.vertex_count();
    const auto loop = make_closed_loop(loaded.spec.system, loaded.result.gains(), SimplexPointd::barycenter(L),
                                       &loaded.spec.failures, &loaded.spec.cost, &loaded.result);
    const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(loop.state_size());
    SimulationOptions options;
    options.horizon = s.horizon;
    options.step = s.step;
    options.record_stride = std::max(1, static_cast<int>(0.01 / s.step));
    write_text_file(s.trajectory, trajectory_csv(simulate(loop, InterconnectionRealization::worst_case(),
                                                          FailureRealization::adversarial(), x0, options)));
  }
  emit({{"provenance", provenance(loaded.sha256, s.seed)},
        {"horizon", s.horizon},
        {"step", s.step},
        {"monte_carlo", to_json(mc)}},
       s.out);
  return mc.violations.empty() && mc.invariant_violations == 0 ? kOk : kVerification;
}

int cmd_demo(const Settings& s) {
  namespace fs = std::filesystem;
  const fs::path dir = s.out.empty() ? fs::path("demo_out") : fs::path(s.out);
  fs::create_directories(dir);
  const SystemSpec spec = demo_fixture();
  const std::string system_text = dump(to_json(spec));
  const std::string sha = sha256_hex(system_text);
  write_text_file((dir / "system.json").string(), system_text);

  const auto report = validate_system(spec.system, spec.cost, spec.failures);
  std::cout << "validate: " << (report.empty() ? "no issues\n" : report.to_string());
  if (!report.reliable_ok()) return kInput;

  const auto result = run_synthesis(spec, SynthesisMode::ReliableGcc, synthesis_options(s));
  std::cout << summary(result);
  // The result file carries the same bytes a user would feed back into `verify`.
  write_text_file((dir / "result.json").string(),
                  dump({{"provenance", provenance(sha, s.seed)}, {"input", to_json(spec)}, {"result", to_json(result)}}));
  if (!result.feasible()) return kInfeasible;

  const auto verification = run_verification(result, spec, s);
  std::cout << "verify: " << verification.checks.size() << " checks, " << verification.failures() << " failures\n";
  write_text_file((dir / "report.json").string(),
                  dump({{"provenance", provenance(sha, s.seed)}, {"report", to_json(verification)}}));

  const auto mc = monte_carlo_cost(result, spec.system, spec.cost, spec.failures, monte_carlo_config(s));
  std::cout << monte_carlo_line(mc);
  write_text_file((dir / "montecarlo.json").string(),
                  dump({{"provenance", provenance(sha, s.seed)},
                        {"horizon", s.horizon},
                        {"step", s.step},
                        {"monte_carlo", to_json(mc)}}));
  const bool pass = verification.passed() && mc.violations.empty() && mc.invariant_violations == 0;
  std::cout << (pass ? "demo: all stages passed\n" : "demo: FAILED\n");
  return pass ? kOk : kVerification;
}

void report_error(const std::string& kind, const std::string& message, int code) {
  std::cerr << Json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reliable decentralized guaranteed-cost control for interconnected polytopic systems"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  Settings s;

  auto add_mode = [&](CLI::App* cmd) {
    cmd->add_option("--mode", s.mode, "stability | reliable")
        ->check(CLI::IsMember({"stability", "reliable"}))
        ->capture_default_str();
  };
  auto add_solver = [&](CLI::App* cmd) {
    cmd->add_option("--epsilon", s.epsilon, "strictness of every LMI (M <= -epsilon I)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--tolerance", s.tolerance, "solver tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_flag("--optimize-trace", s.optimize_trace, "minimise max_k sum_i tr(X_ik) (reliable mode)");
    cmd->add_flag("--parameter-independent", s.parameter_independent, "one Lyapunov matrix for all vertices");
  };
  auto add_grid = [&](CLI::App* cmd) {
    cmd->add_option("--grid-samples", s.grid_samples, "random interior simplex points")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
  };
  auto add_mc = [&](CLI::App* cmd) {
    cmd->add_option("--mc-samples", s.mc_samples, "Monte Carlo samples")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--horizon", s.horizon, "simulation horizon T")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--step", s.step, "RK4 step h")->check(CLI::PositiveNumber)->capture_default_str();
  };
  auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", s.seed, "top-level seed")->capture_default_str(); };

  auto* validate = app.add_subcommand("validate", "check shapes and standing assumptions");
  validate->add_option("input", s.input, "system file")->required();
  validate->add_option("--out", s.out, "write the issue list as JSON");
  add_mode(validate);
  add_seed(validate);

  auto* synthesize = app.add_subcommand("synthesize", "solve the LMIs and write a result file");
  synthesize->add_option("input", s.input, "system file")->required();
  synthesize->add_option("--out", s.out, "result file (stdout when omitted)");
  add_mode(synthesize);
  add_solver(synthesize);
  add_seed(synthesize);

  auto* verify = app.add_subcommand("verify", "independent a-posteriori checks of a result file");
  verify->add_option("input", s.input, "result file")->required();
  verify->add_option("--out", s.out, "report file (stdout when omitted)");
  add_grid(verify);
  add_seed(verify);

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo test of the cost bound");
  simulate_cmd->add_option("input", s.input, "result file (reliable mode)")->required();
  simulate_cmd->add_option("--out", s.out, "summary file (stdout when omitted)");
  simulate_cmd->add_option("--trajectory", s.trajectory, "CSV of one worst-case trajectory from x0 = 1");
  add_mc(simulate_cmd);
  add_seed(simulate_cmd);

  auto* demo = app.add_subcommand("demo", "run the whole pipeline on the built-in two-subsystem fixture");
  demo->add_option("--out", s.out, "output directory")->capture_default_str();
  add_solver(demo);
  add_grid(demo);
  add_mc(demo);
  add_seed(demo);
  demo->preparse_callback([&](std::size_t) { s.mc_samples = 200; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what(), kInput);
    return kInput;
  }

  try {
    if (*validate) return cmd_validate(s);
    if (*synthesize) return cmd_synthesize(s);
    if (*verify) return cmd_verify(s);
    if (*simulate_cmd) return cmd_simulate(s);
    if (*demo) return cmd_demo(s);
  } catch (const AssumptionViolation& e) {
    report_error("assumption", e.what(), kInput);
    return kInput;
  } catch (const InputError& e) {
    report_error("input", e.what(), kInput);
    return kInput;
  } catch (const std::invalid_argument& e) {
    report_error("input", e.what(), kInput);
    return kInput;
  } catch (const NumericalError& e) {
    report_error("numerical", e.what(), kInternal);
    return kInternal;
  } catch (const std::exception& e) {
    report_error("internal", e.what(), kInternal);
    return kInternal;
  }
  return kInternal;
}
