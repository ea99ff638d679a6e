#pragma once

#include "rdgcc/lmi_blocks.hpp"
#include "rdgcc/sdp.hpp"
#include "rdgcc/synthesis.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rdgcc {

struct Check {
  std::string category;
  std::string name;
  std::string point;  // grid point description
  double value = 0.0;  // max eigenvalue, spectral abscissa or norm, depending on the category
  bool pass = false;
};

struct VerificationReport {
  std::vector<Check> checks;
  /// Set when the instance was infeasible, so nothing could be checked.
  bool vacuous = false;
  std::string note;

  void add(Check check) { checks.push_back(std::move(check)); }
  void merge(const VerificationReport& other);
  bool passed() const;
  std::size_t failures() const;
  /// Largest value per category.
  std::map<std::string, double> worst_by_category() const;
};

struct SchurOutcome {
  bool direct = false;
  std::optional<bool> via_complement;  // empty when P3 is singular
};

/// M = [[P1, P2], [P2^T, P3]] with P1 of size `split`.
SchurOutcome schur_oracle(const Eigen::MatrixXd& M, Eigen::Index split);

struct ProjectionOutcome {
  bool lhs = false;
  bool rhs = false;
  /// False when the SDP came back inconclusive.
  bool lhs_decided = true;
  /// Some singular value of P or Q lies within a factor 100 of the null-space threshold.
  bool clustered = false;
  double rhs_margin = 0.0;  // max eigenvalue over the two projected conditions
  double lhs_margin = 0.0;  // optimal shift reported by the SDP
};

/// Existence of X with Psi + P^T X^T Q + Q^T X P < 0 against the null-space test.
ProjectionOutcome projection_oracle(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q,
                                    const SolverOptions& options = {});

/// Basis of the numerical null space, singular values below 1e-10 sigma_max counted as zero.
Eigen::MatrixXd numerical_null_space(const Eigen::MatrixXd& m);

struct SlackInstance {
  std::vector<Eigen::MatrixXd> A, B;  // vertex matrices
  Eigen::MatrixXd G, C;
  QBlocks<double> q;
};

struct RoundtripOptions {
  int interior_samples = 50;
  std::uint64_t seed = 0;
  double strictness = 1e-6;
  SolverOptions solver;
};

/// Solves the slack LMIs, maps the solution back (K = N V^{-1}, X_k = Y_k^{-1}) and checks the
/// primal inequality at every vertex and at seeded interior points with X(alpha) = (sum alpha_k Y_k)^{-1}.
/// For a single vertex the reverse direction is checked too. Throws std::invalid_argument when Q is not
/// negative definite.
VerificationReport slack_roundtrip(const SlackInstance& instance, const RoundtripOptions& options = {});

struct GridOptions {
  int interior_samples = 50;
  std::uint64_t seed = 0;
  bool midpoints = true;
};

struct GridPoint {
  SimplexPointd alpha;
  std::string label;
};

/// Vertices, pairwise midpoints and seeded uniform interior points.
std::vector<GridPoint> simplex_grid(Eigen::Index vertices, const GridOptions& options = {});

/// Diagonals lambda + sigma gamma for sigma in {-1, 0, 1}^s.
std::vector<std::pair<Eigen::VectorXd, std::string>> failure_extremes(const Eigen::VectorXd& lambda,
                                                                       const Eigen::VectorXd& gamma);

/// A-posteriori checks of a synthesis result. Reliable results need cost and failures.
/// Stability results check the stability inequality and nominal closed-loop eigenvalues only.
VerificationReport verify_closed_loop(const SynthesisResult& result, const InterconnectedSystemd& system,
                                      const CostSpecd* cost, const FailureModeld* failures,
                                      const GridOptions& grid = {});

}  // namespace rdgcc
