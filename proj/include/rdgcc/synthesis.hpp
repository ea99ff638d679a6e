#pragma once

#include "rdgcc/lmi_blocks.hpp"
#include "rdgcc/model.hpp"
#include "rdgcc/sdp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rdgcc {

enum class SynthesisMode { Stability, ReliableGcc };

std::string to_string(SynthesisMode mode);
SynthesisMode synthesis_mode_from_string(const std::string& name);

struct SynthesisOptions {
  double strictness = 1e-6;
  SolverOptions solver;
  /// Minimise max_k sum_i tr(Z_ik) with Z_ik >= Y_ik^{-1}; couples all subsystems into one problem.
  bool optimize_trace = false;
  bool parameter_independent = false;
  /// Test hook: drop N_i so K_i = 0.
  bool fix_zero_gain = false;
  /// Solve subsystems on separate threads; results are merged by index either way.
  bool parallel = true;
};

struct ConstraintResidual {
  std::string name;
  double max_eigenvalue = 0.0;
  double strictness = 0.0;
};

struct SubsystemSynthesis {
  Eigen::Index index = 0;
  SdpStatus status = SdpStatus::Inconclusive;
  Eigen::MatrixXd K;               // s_i x n_i
  Eigen::MatrixXd V, N;            // slack and N_i = K_i V_i
  std::vector<Eigen::MatrixXd> Y;  // one per vertex (repeated when parameter independent)
  std::vector<Eigen::MatrixXd> X;  // Y_ik^{-1}
  std::vector<ConstraintResidual> residuals;
  double margin = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
  std::string diagnostics;

  bool ok() const { return status == SdpStatus::Feasible; }
};

struct SynthesisResult {
  SynthesisMode mode = SynthesisMode::Stability;
  SynthesisOptions options;
  std::vector<SubsystemSynthesis> subsystems;
  /// Objective value of the joint trace problem, when optimize_trace was requested.
  std::optional<double> trace_objective;

  bool feasible() const;
  std::vector<Eigen::Index> failed() const;
  Eigen::Index vertex_count() const { return subsystems.empty() ? 0 : static_cast<Eigen::Index>(subsystems[0].Y.size()); }
  std::vector<Eigen::MatrixXd> gains() const;
};

/// One subsystem's feasibility problem (every vertex pair of main and auxiliary LMIs).
SdpProblem stability_problem(const InterconnectedSystemd& system, Eigen::Index i, const SynthesisOptions& options = {});
SdpProblem reliable_problem(const InterconnectedSystemd& system, const CostSpecd& cost, const FailureModeld& failures,
                            Eigen::Index i, const SynthesisOptions& options = {});

/// Throws InputError when validation reports a hard violation.
SynthesisResult synthesize_stabilizing(const InterconnectedSystemd& system, const SynthesisOptions& options = {});

/// Throws AssumptionViolation when R_i - I is not negative definite for some i.
SynthesisResult synthesize_reliable_gcc(const InterconnectedSystemd& system, const CostSpecd& cost,
                                        const FailureModeld& failures, const SynthesisOptions& options = {});

/// K = N V^{-1}; throws NumericalError when V is numerically singular.
Eigen::MatrixXd recover_gain(const Eigen::MatrixXd& N, const Eigen::MatrixXd& V);

struct CostBound {
  std::vector<double> per_vertex;  // sum_i x_i0^T X_ik x_i0
  double worst_case = 0.0;
};

/// x0 stacks the subsystem initial states in index order.
CostBound cost_bound_for_initial_state(const SynthesisResult& result, const Eigen::VectorXd& x0);

/// max_k sum_i tr(X_ik).
double expected_cost_bound(const SynthesisResult& result);

/// sum_k alpha_k X_ik.
Eigen::MatrixXd lyapunov_matrix(const SubsystemSynthesis& sub, const SimplexPointd& alpha);

/// (sum_k alpha_k Y_ik)^{-1}. Equal to lyapunov_matrix at vertices and never larger in between.
Eigen::MatrixXd certified_lyapunov_matrix(const SubsystemSynthesis& sub, const SimplexPointd& alpha);

/// Offsets of each subsystem inside a stacked state vector.
std::vector<Eigen::Index> state_offsets(const InterconnectedSystemd& system);

}  // namespace rdgcc
