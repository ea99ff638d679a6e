#include "rdgcc/synthesis.hpp"

#include "rdgcc/errors.hpp"

#include <algorithm>
#include <functional>
#include <future>
#include <limits>

namespace rdgcc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(SynthesisMode mode) {
  return mode == SynthesisMode::Stability ? "stability" : "reliable";
}

SynthesisMode synthesis_mode_from_string(const std::string& name) {
  if (name == "stability") return SynthesisMode::Stability;
  if (name == "reliable") return SynthesisMode::ReliableGcc;
  throw InputError("unknown synthesis mode '" + name + "' (expected stability or reliable)");
}

bool SynthesisResult::feasible() const {
  return !subsystems.empty() &&
         std::all_of(subsystems.begin(), subsystems.end(), [](const auto& s) { return s.ok(); });
}

std::vector<Index> SynthesisResult::failed() const {
  std::vector<Index> out;
  for (const auto& s : subsystems)
    if (!s.ok()) out.push_back(s.index);
  return out;
}

std::vector<MatrixXd> SynthesisResult::gains() const {
  std::vector<MatrixXd> out;
  for (const auto& s : subsystems) out.push_back(s.K);
  return out;
}

namespace {

LmiBuildOptions build_options(const SynthesisOptions& options) {
  LmiBuildOptions out;
  out.strictness = options.strictness;
  out.parameter_independent = options.parameter_independent;
  out.fix_zero_gain = options.fix_zero_gain;
  return out;
}

void append_pairs(SdpProblem& problem, std::vector<LmiPair> pairs) {
  for (auto& pair : pairs) {
    problem.add_constraint(std::move(pair.main));
    problem.add_constraint(std::move(pair.auxiliary));
  }
}

void require_structure(const InterconnectedSystemd& system) {
  const auto report = validate_structure(system);
  if (!report.stability_ok()) throw InputError("system validation failed:\n" + report.to_string());
}

SubsystemSynthesis extract(const InterconnectedSystemd& system, Index i, const SdpProblem& problem,
                           const SdpSolution& sol, Index first_constraint, Index constraint_count,
                           const SynthesisOptions& options) {
  const auto& sub = system.subsystems[i];
  SubsystemSynthesis out;
  out.index = i;
  out.status = sol.status;
  out.margin = sol.margin;
  out.iterations = sol.iterations;
  out.diagnostics = sol.diagnostics;
  out.max_violation = -std::numeric_limits<double>::infinity();
  for (Index c = first_constraint; c < first_constraint + constraint_count; ++c) {
    const auto& lmi = problem.constraints[c];
    const double r = c < static_cast<Index>(sol.residuals.size()) ? sol.residuals[c] : 0.0;
    out.residuals.push_back({lmi.name(), r, lmi.strictness()});
    out.max_violation = std::max(out.max_violation, r + lmi.strictness());
  }
  if (sol.assignment.empty()) return out;

  const Index n = sub.state_dim;
  out.V = sol.assignment.at(slack_id(i));
  out.N = options.fix_zero_gain ? MatrixXd::Zero(sub.input_dim, n) : sol.assignment.at(gain_id(i));
  for (Index k = 0; k < sub.vertex_count(); ++k)
    out.Y.push_back(sol.assignment.at(lyapunov_id(i, k, options.parameter_independent)));
  if (!out.ok()) return out;
  try {
    out.K = recover_gain(out.N, out.V);
    for (const auto& y : out.Y) {
      Eigen::LLT<MatrixXd> llt(y);
      if (llt.info() != Eigen::Success) throw NumericalError("Y not positive definite");
      out.X.push_back(symmetrize(llt.solve(MatrixXd::Identity(n, n))));
    }
  } catch (const NumericalError& e) {
    out.status = SdpStatus::Inconclusive;
    out.diagnostics += std::string("recovery failed: ") + e.what() + "; ";
    out.K.resize(0, 0);
    out.X.clear();
  }
  return out;
}

// Per-subsystem problems solved independently and merged by index.
SynthesisResult solve_independent(const InterconnectedSystemd& system, SynthesisMode mode,
                                  const std::function<SdpProblem(Index)>& make_problem,
                                  const SynthesisOptions& options) {
  std::vector<SdpProblem> problems;
  for (Index i = 0; i < system.size(); ++i) problems.push_back(make_problem(i));
  auto run = [&](Index i) {
    const SdpSolution sol = solve(problems[i], options.solver);
    return extract(system, i, problems[i], sol, 0, static_cast<Index>(problems[i].constraints.size()), options);
  };
  SynthesisResult result;
  result.mode = mode;
  result.options = options;
  if (options.parallel && system.size() > 1) {
    std::vector<std::future<SubsystemSynthesis>> futures;
    for (Index i = 0; i < system.size(); ++i) futures.push_back(std::async(std::launch::async, run, i));
    for (auto& f : futures) result.subsystems.push_back(f.get());
  } else {
    for (Index i = 0; i < system.size(); ++i) result.subsystems.push_back(run(i));
  }
  return result;
}

std::string trace_id(Index i, Index k, bool parameter_independent) {
  if (parameter_independent) return "Z[" + std::to_string(i) + "]";
  return "Z[" + std::to_string(i) + "," + std::to_string(k) + "]";
}

// Joint problem: all subsystem LMIs plus Z_ik >= Y_ik^{-1} and sum_i tr(Z_ik) <= J for every k; minimise J.
SynthesisResult solve_trace(const InterconnectedSystemd& system,
                            const std::function<SdpProblem(Index)>& make_problem, const SynthesisOptions& options) {
  SdpProblem joint;
  std::vector<Index> first, count;
  for (Index i = 0; i < system.size(); ++i) {
    SdpProblem part = make_problem(i);
    first.push_back(static_cast<Index>(joint.constraints.size()));
    count.push_back(static_cast<Index>(part.constraints.size()));
    for (auto& lmi : part.constraints) joint.add_constraint(std::move(lmi));
  }
  const VariableDecl bound{"J", 1, 1, VariableKind::Symmetric};
  const Index L = system.vertex_count();
  for (Index k = 0; k < L; ++k) {
    AffineLmi sum("trace-sum:" + std::to_string(k), {1}, 0.0);
    sum.declare(bound);
    sum.add_left("J", -0.5 * MatrixXd::Identity(1, 1), 0, 0);
    for (Index i = 0; i < system.size(); ++i) {
      const Index n = system.subsystems[i].state_dim;
      const VariableDecl y{lyapunov_id(i, k, options.parameter_independent), n, n,
                           VariableKind::SymmetricPositiveDefinite};
      const VariableDecl z{trace_id(i, k, options.parameter_independent), n, n, VariableKind::Symmetric};
      if (!joint.find_variable(z.id)) joint.add_constraint(build_trace_epigraph(y, z));
      sum.declare(z);
      for (Index a = 0; a < n; ++a) {
        const VectorXd e = VectorXd::Unit(n, a);
        sum.add_term(z.id, 0.5 * e.transpose(), e, 0, 0);
      }
    }
    joint.add_constraint(std::move(sum));
  }
  joint.objective.push_back({"J", MatrixXd::Ones(1, 1)});

  const SdpSolution sol = solve(joint, options.solver);
  SynthesisResult result;
  result.mode = SynthesisMode::ReliableGcc;
  result.options = options;
  for (Index i = 0; i < system.size(); ++i)
    result.subsystems.push_back(extract(system, i, joint, sol, first[i], count[i], options));
  if (sol.status == SdpStatus::Feasible) result.trace_objective = sol.objective_value;
  return result;
}

}  // namespace

SdpProblem stability_problem(const InterconnectedSystemd& system, Index i, const SynthesisOptions& options) {
  SdpProblem problem;
  append_pairs(problem, build_stability_lmis(system, i, build_options(options)));
  return problem;
}

SdpProblem reliable_problem(const InterconnectedSystemd& system, const CostSpecd& cost, const FailureModeld& failures,
                            Index i, const SynthesisOptions& options) {
  SdpProblem problem;
  append_pairs(problem, build_reliable_lmis(system, cost, failures, i, build_options(options)));
  return problem;
}

SynthesisResult synthesize_stabilizing(const InterconnectedSystemd& system, const SynthesisOptions& options) {
  require_structure(system);
  if (options.optimize_trace) throw InputError("trace optimization needs a cost and is only available in reliable mode");
  auto make = [&](Index i) { return stability_problem(system, i, options); };
  return solve_independent(system, SynthesisMode::Stability, make, options);
}

SynthesisResult synthesize_reliable_gcc(const InterconnectedSystemd& system, const CostSpecd& cost,
                                        const FailureModeld& failures, const SynthesisOptions& options) {
  const auto report = validate_system(system, cost, failures);
  if (!report.stability_ok()) throw InputError("system validation failed:\n" + report.to_string());
  // Fail fast on assumption A3 before any solve.
  for (Index i = 0; i < system.size(); ++i) reliable_blocks(system, cost, failures, i);
  auto make = [&](Index i) { return reliable_problem(system, cost, failures, i, options); };
  if (options.optimize_trace) return solve_trace(system, make, options);
  return solve_independent(system, SynthesisMode::ReliableGcc, make, options);
}

MatrixXd recover_gain(const MatrixXd& N, const MatrixXd& V) {
  if (V.rows() != V.cols() || N.cols() != V.rows()) throw std::invalid_argument("recover_gain: dimension mismatch");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(V.transpose());
  qr.setThreshold(1e-12);
  if (!qr.isInvertible()) throw NumericalError("slack variable V is numerically singular");
  return qr.solve(N.transpose()).transpose();
}

std::vector<Index> state_offsets(const InterconnectedSystemd& system) {
  std::vector<Index> out;
  Index total = 0;
  for (const auto& sub : system.subsystems) {
    out.push_back(total);
    total += sub.state_dim;
  }
  out.push_back(total);
  return out;
}

namespace {

void require_solved(const SynthesisResult& result) {
  if (!result.feasible()) throw std::invalid_argument("synthesis result is not feasible");
}

}  // namespace

CostBound cost_bound_for_initial_state(const SynthesisResult& result, const VectorXd& x0) {
  require_solved(result);
  Index total = 0;
  for (const auto& s : result.subsystems) total += s.X.front().rows();
  if (x0.size() != total) throw std::invalid_argument("cost_bound_for_initial_state: x0 has the wrong size");
  CostBound out;
  for (Index k = 0; k < result.vertex_count(); ++k) {
    double value = 0.0;
    Index offset = 0;
    for (const auto& s : result.subsystems) {
      const Index n = s.X[k].rows();
      const VectorXd xi = x0.segment(offset, n);
      value += xi.dot(s.X[k] * xi);
      offset += n;
    }
    out.per_vertex.push_back(value);
  }
  out.worst_case = *std::max_element(out.per_vertex.begin(), out.per_vertex.end());
  return out;
}

double expected_cost_bound(const SynthesisResult& result) {
  require_solved(result);
  double worst = -std::numeric_limits<double>::infinity();
  for (Index k = 0; k < result.vertex_count(); ++k) {
    double sum = 0.0;
    for (const auto& s : result.subsystems) sum += s.X[k].trace();
    worst = std::max(worst, sum);
  }
  return worst;
}

MatrixXd lyapunov_matrix(const SubsystemSynthesis& sub, const SimplexPointd& alpha) {
  if (alpha.size() != static_cast<Index>(sub.X.size())) throw std::invalid_argument("alpha size mismatch");
  MatrixXd out = MatrixXd::Zero(sub.X[0].rows(), sub.X[0].cols());
  for (Index k = 0; k < alpha.size(); ++k) out += alpha[k] * sub.X[k];
  return out;
}

MatrixXd certified_lyapunov_matrix(const SubsystemSynthesis& sub, const SimplexPointd& alpha) {
  if (alpha.size() != static_cast<Index>(sub.Y.size())) throw std::invalid_argument("alpha size mismatch");
  MatrixXd y = MatrixXd::Zero(sub.Y[0].rows(), sub.Y[0].cols());
  for (Index k = 0; k < alpha.size(); ++k) y += alpha[k] * sub.Y[k];
  return symmetrize(y.llt().solve(MatrixXd::Identity(y.rows(), y.cols())));
}

}  // namespace rdgcc
