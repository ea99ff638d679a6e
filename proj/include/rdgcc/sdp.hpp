#pragma once

#include "rdgcc/affine_lmi.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rdgcc {

enum class SdpStatus { Feasible, Infeasible, Inconclusive };

std::string to_string(SdpStatus status);

/// tr(weight^T * Var).
struct ObjectiveTerm {
  std::string variable;
  Eigen::MatrixXd weight;
};

struct SdpProblem {
  std::vector<VariableDecl> variables;
  std::vector<AffineLmi> constraints;
  std::vector<ObjectiveTerm> objective;  // empty: pure feasibility

  /// Declares a variable unless an identical declaration exists; conflicting redeclaration throws.
  void add_variable(const VariableDecl& decl);
  /// Appends a constraint and declares every variable it references.
  void add_constraint(AffineLmi lmi);
  const VariableDecl* find_variable(const std::string& id) const;
  /// Throws InputError when a constraint or objective term is inconsistent with the declarations.
  void check() const;
};

struct SolverOptions {
  double tolerance = 1e-8;
  int max_iterations = 500;
  std::string backend = "barrier";
  /// Euclidean bound on the stacked decision vector; infeasibility is claimed within this ball.
  double variable_bound = 1e4;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::Inconclusive;
  Assignment assignment;
  /// max_j lambda_max(M_j) over the caller's constraints, recomputed from the assignment.
  double max_residual = 0.0;
  /// max_j (lambda_max(M_j) + strictness_j); nonpositive when every constraint holds.
  double max_violation = 0.0;
  std::vector<double> residuals;  // lambda_max(M_j), constraint order
  /// Optimal uniform shift t in M_j + eps_j I <= t I found by the feasibility phase.
  double margin = 0.0;
  std::optional<double> objective_value;
  int iterations = 0;
  std::string backend;
  std::string diagnostics;
};

class SdpBackend {
 public:
  virtual ~SdpBackend() = default;
  virtual std::string name() const = 0;
  virtual SdpSolution solve(const SdpProblem& problem, const SolverOptions& options) const = 0;
};

/// Primal log-det barrier path-following method with a two-phase (margin, objective) scheme.
/// Deterministic; intended for problems with total LMI size up to a few hundred.
class BarrierBackend final : public SdpBackend {
 public:
  std::string name() const override { return "barrier"; }
  SdpSolution solve(const SdpProblem& problem, const SolverOptions& options) const override;
};

/// Backend registry lookup; throws InputError for unknown names.
std::unique_ptr<SdpBackend> make_backend(const std::string& name);

/// Solves with the backend named in `options`, then recomputes every residual from the assignment.
SdpSolution solve(const SdpProblem& problem, const SolverOptions& options = {});

/// Re-assembles every constraint at `assignment`, filling residual fields of `solution`.
void recompute_residuals(const SdpProblem& problem, SdpSolution& solution);

}  // namespace rdgcc
