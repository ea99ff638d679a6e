#pragma once

#include "rdgcc/linalg.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rdgcc {

/// Point of the unit simplex: nonnegative weights summing to one.
template <typename Scalar>
class SimplexPoint {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit SimplexPoint(VectorX<Scalar> weights) : weights_(std::move(weights)) {
    if (weights_.size() == 0) throw std::invalid_argument("simplex point needs at least one weight");
    for (Eigen::Index k = 0; k < weights_.size(); ++k)
      if (!(weights_(k) >= Scalar(0)))
        throw std::invalid_argument("simplex weights must be nonnegative");
    using std::abs;
    if (abs(weights_.sum() - Scalar(1)) > Scalar(kSumTolerance))
      throw std::invalid_argument("simplex weights must sum to one");
  }

  static SimplexPoint vertex(Eigen::Index count, Eigen::Index k) {
    return SimplexPoint(VectorX<Scalar>::Unit(count, k));
  }
  static SimplexPoint barycenter(Eigen::Index count) {
    return SimplexPoint(VectorX<Scalar>::Constant(count, Scalar(1) / Scalar(count)));
  }
  /// Renormalizes nonnegative weights; used by samplers whose raw output drifts in the last bit.
  static SimplexPoint normalized(VectorX<Scalar> raw) {
    const Scalar total = raw.sum();
    if (!(total > Scalar(0))) throw std::invalid_argument("cannot normalize zero weights");
    raw /= total;
    // Push the rounding residue into the largest weight so the sum is exact to working precision.
    Eigen::Index big = 0;
    raw.maxCoeff(&big);
    raw(big) += Scalar(1) - raw.sum();
    return SimplexPoint(std::move(raw));
  }

  Eigen::Index size() const { return weights_.size(); }
  Scalar operator[](Eigen::Index k) const { return weights_(k); }
  const VectorX<Scalar>& weights() const { return weights_; }

 private:
  VectorX<Scalar> weights_;
};

/// Subsystem whose (A, B) pair ranges over the convex hull of L vertex pairs.
template <typename Scalar>
struct PolytopicSubsystem {
  Eigen::Index state_dim = 0;
  Eigen::Index input_dim = 0;
  Eigen::Index coupling_dim = 0;
  std::vector<MatrixX<Scalar>> vertex_A;
  std::vector<MatrixX<Scalar>> vertex_B;

  Eigen::Index vertex_count() const { return static_cast<Eigen::Index>(vertex_A.size()); }
};

/// Coupling from subsystem j into subsystem i: term G_ij g_ij(t, x_j), ||g_ij|| <= ||W_ij x_j||.
template <typename Scalar>
struct Link {
  MatrixX<Scalar> G;  // n_i x l_i
  MatrixX<Scalar> W;  // l_i x n_j
};

template <typename Scalar>
class InterconnectedSystem {
 public:
  using LinkKey = std::pair<Eigen::Index, Eigen::Index>;  // (to i, from j)

  std::vector<PolytopicSubsystem<Scalar>> subsystems;
  std::map<LinkKey, Link<Scalar>> links;

  Eigen::Index size() const { return static_cast<Eigen::Index>(subsystems.size()); }
  Eigen::Index vertex_count() const { return subsystems.empty() ? 0 : subsystems.front().vertex_count(); }

  /// G_ij, or the zero matrix when the link is absent.
  MatrixX<Scalar> gain(Eigen::Index i, Eigen::Index j) const {
    if (auto it = links.find({i, j}); it != links.end()) return it->second.G;
    return MatrixX<Scalar>::Zero(subsystems[i].state_dim, subsystems[i].coupling_dim);
  }
  /// W_ij, or the zero matrix when the link is absent.
  MatrixX<Scalar> bound(Eigen::Index i, Eigen::Index j) const {
    if (auto it = links.find({i, j}); it != links.end()) return it->second.W;
    return MatrixX<Scalar>::Zero(subsystems[i].coupling_dim, subsystems[j].state_dim);
  }

  /// G_i = (G_i1, ..., G_iN) with j = i skipped, ascending j.
  MatrixX<Scalar> stacked_gain(Eigen::Index i) const {
    const auto& sub = subsystems[i];
    MatrixX<Scalar> out(sub.state_dim, (size() - 1) * sub.coupling_dim);
    Eigen::Index col = 0;
    for (Eigen::Index j = 0; j < size(); ++j) {
      if (j == i) continue;
      out.middleCols(col, sub.coupling_dim) = gain(i, j);
      col += sub.coupling_dim;
    }
    return out;
  }
};

/// Actuator envelope u^F = Lambda u + phi(u), |phi_j(u_j)| <= gamma_j |u_j|.
template <typename Scalar>
struct FailureModel {
  std::vector<VectorX<Scalar>> lambda;
  std::vector<VectorX<Scalar>> gamma;

  static FailureModel nominal(const InterconnectedSystem<Scalar>& system) {
    FailureModel out;
    for (const auto& sub : system.subsystems) {
      out.lambda.push_back(VectorX<Scalar>::Ones(sub.input_dim));
      out.gamma.push_back(VectorX<Scalar>::Zero(sub.input_dim));
    }
    return out;
  }

  MatrixX<Scalar> Lambda(Eigen::Index i) const { return lambda[i].asDiagonal(); }
  MatrixX<Scalar> Gamma(Eigen::Index i) const { return gamma[i].asDiagonal(); }
};

/// Quadratic cost weights, one (Q_i, R_i) pair per subsystem.
template <typename Scalar>
struct CostSpec {
  std::vector<MatrixX<Scalar>> Q;
  std::vector<MatrixX<Scalar>> R;
};

enum class IssueSeverity {
  Violation,            ///< synthesis refuses
  ReliableUnavailable,  ///< stability-only synthesis still possible
};

struct ValidationIssue {
  IssueSeverity severity = IssueSeverity::Violation;
  std::string code;
  Eigen::Index subsystem = -1;
  Eigen::Index source = -1;  // sending subsystem for link issues
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool empty() const { return issues.empty(); }
  bool stability_ok() const {
    for (const auto& issue : issues)
      if (issue.severity == IssueSeverity::Violation) return false;
    return true;
  }
  bool reliable_ok() const { return issues.empty(); }
  bool mentions(const std::string& fragment) const {
    for (const auto& issue : issues)
      if (issue.message.find(fragment) != std::string::npos) return true;
    return false;
  }
  std::string to_string() const {
    std::ostringstream os;
    for (const auto& issue : issues)
      os << (issue.severity == IssueSeverity::Violation ? "[violation] " : "[reliable-unavailable] ")
         << issue.message << '\n';
    return os.str();
  }
};

template <typename Scalar>
std::pair<MatrixX<Scalar>, MatrixX<Scalar>> evaluate_at_alpha(const PolytopicSubsystem<Scalar>& sub,
                                                              const SimplexPoint<Scalar>& alpha) {
  if (alpha.size() != sub.vertex_count())
    throw std::invalid_argument("simplex point size does not match vertex count");
  MatrixX<Scalar> A = MatrixX<Scalar>::Zero(sub.state_dim, sub.state_dim);
  MatrixX<Scalar> B = MatrixX<Scalar>::Zero(sub.state_dim, sub.input_dim);
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    if (sub.vertex_A[k].rows() != A.rows() || sub.vertex_A[k].cols() != A.cols() ||
        sub.vertex_B[k].rows() != B.rows() || sub.vertex_B[k].cols() != B.cols())
      throw std::invalid_argument("vertex matrix dimension mismatch");
    A.noalias() += alpha[k] * sub.vertex_A[k];
    B.noalias() += alpha[k] * sub.vertex_B[k];
  }
  return {std::move(A), std::move(B)};
}

/// W_i = sum_{j != i} W_ji^T W_ji.
template <typename Scalar>
MatrixX<Scalar> coupling_matrix(const InterconnectedSystem<Scalar>& system, Eigen::Index i) {
  const Eigen::Index n = system.subsystems[i].state_dim;
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(n, n);
  for (Eigen::Index j = 0; j < system.size(); ++j) {
    if (j == i) continue;
    const MatrixX<Scalar> w = system.bound(j, i);
    out.noalias() += w.transpose() * w;
  }
  return symmetrize(out);
}

namespace detail {
template <typename Scalar>
bool all_finite(const MatrixX<Scalar>& m) {
  return m.allFinite();
}

// Shapes, links and assumption A2. Returns false when shapes are too broken for further checks.
template <typename Scalar>
bool validate_structure(const InterconnectedSystem<Scalar>& system, ValidationReport& report) {
  auto add = [&](IssueSeverity sev, std::string code, Eigen::Index i, Eigen::Index j, std::string msg) {
    report.issues.push_back({sev, std::move(code), i, j, std::move(msg)});
  };
  const auto N = system.size();
  if (N == 0) {
    add(IssueSeverity::Violation, "empty", -1, -1, "system has no subsystems");
    return false;
  }

  bool shapes_ok = true;
  const auto L = system.vertex_count();
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& sub = system.subsystems[i];
    const std::string tag = "subsystem " + std::to_string(i);
    if (sub.vertex_count() < 1 || sub.vertex_count() != L ||
        static_cast<Eigen::Index>(sub.vertex_B.size()) != sub.vertex_count()) {
      add(IssueSeverity::Violation, "vertex-count", i, -1,
          tag + ": vertex count must be >= 1 and identical across subsystems");
      shapes_ok = false;
      continue;
    }
    if (sub.state_dim < 1 || sub.input_dim < 1 || sub.coupling_dim < 1) {
      add(IssueSeverity::Violation, "dims", i, -1, tag + ": dimensions must be positive");
      shapes_ok = false;
      continue;
    }
    for (Eigen::Index k = 0; k < L; ++k) {
      const auto& A = sub.vertex_A[k];
      const auto& B = sub.vertex_B[k];
      if (A.rows() != sub.state_dim || A.cols() != sub.state_dim || B.rows() != sub.state_dim ||
          B.cols() != sub.input_dim) {
        add(IssueSeverity::Violation, "vertex-shape", i, -1,
            tag + ": vertex " + std::to_string(k) + " has inconsistent A/B shape");
        shapes_ok = false;
      } else if (!detail::all_finite(A) || !detail::all_finite(B)) {
        add(IssueSeverity::Violation, "non-finite", i, -1,
            tag + ": vertex " + std::to_string(k) + " has non-finite entries");
        shapes_ok = false;
      }
    }
  }
  for (const auto& [key, link] : system.links) {
    const auto [i, j] = key;
    const std::string tag = "link " + std::to_string(j) + "->" + std::to_string(i);
    if (i < 0 || j < 0 || i >= N || j >= N || i == j) {
      add(IssueSeverity::Violation, "link-index", i, j, tag + ": invalid subsystem indices");
      shapes_ok = false;
      continue;
    }
    const auto& to = system.subsystems[i];
    const auto& from = system.subsystems[j];
    if (link.G.rows() != to.state_dim || link.G.cols() != to.coupling_dim || link.W.rows() != to.coupling_dim ||
        link.W.cols() != from.state_dim) {
      add(IssueSeverity::Violation, "link-shape", i, j, tag + ": G must be n_i x l_i and W must be l_i x n_j");
      shapes_ok = false;
    }
  }
  if (!shapes_ok) return false;

  for (Eigen::Index i = 0; i < N; ++i) {
    if (!is_positive_definite(coupling_matrix(system, i)))
      add(IssueSeverity::Violation, "coupling", i, -1,
          "subsystem " + std::to_string(i) + ": coupling matrix W_i not positive definite (assumption A2)");
  }
  return true;
}
}  // namespace detail

/// Structural checks and assumption A2 only; what stability synthesis needs.
template <typename Scalar>
ValidationReport validate_structure(const InterconnectedSystem<Scalar>& system) {
  ValidationReport report;
  detail::validate_structure(system, report);
  return report;
}

/// Checks every standing assumption. Never throws; callers decide severity.
template <typename Scalar>
ValidationReport validate_system(const InterconnectedSystem<Scalar>& system, const CostSpec<Scalar>& cost,
                                 const FailureModel<Scalar>& failures) {
  ValidationReport report;
  if (!detail::validate_structure(system, report)) return report;
  const auto N = system.size();
  auto add = [&](IssueSeverity sev, std::string code, Eigen::Index i, Eigen::Index j, std::string msg) {
    report.issues.push_back({sev, std::move(code), i, j, std::move(msg)});
  };

  if (static_cast<Eigen::Index>(cost.Q.size()) != N || static_cast<Eigen::Index>(cost.R.size()) != N) {
    add(IssueSeverity::Violation, "cost-count", -1, -1, "cost must provide one Q and one R per subsystem");
  } else {
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto& sub = system.subsystems[i];
      const std::string tag = "subsystem " + std::to_string(i);
      const auto& Q = cost.Q[i];
      const auto& R = cost.R[i];
      if (Q.rows() != sub.state_dim || Q.cols() != sub.state_dim || !is_positive_definite(Q))
        add(IssueSeverity::Violation, "cost-Q", i, -1, tag + ": Q_i must be symmetric positive definite n_i x n_i");
      if (R.rows() != sub.input_dim || R.cols() != sub.input_dim || !is_positive_definite(R)) {
        add(IssueSeverity::Violation, "cost-R", i, -1, tag + ": R_i must be symmetric positive definite s_i x s_i");
      } else if (!is_negative_definite((R - MatrixX<Scalar>::Identity(R.rows(), R.cols())).eval())) {
        add(IssueSeverity::ReliableUnavailable, "assumption-A3", i, -1,
            tag + ": R_i - I is not negative definite (assumption A3); reliable synthesis unavailable, "
                  "stability-only synthesis still possible");
      }
    }
  }

  if (static_cast<Eigen::Index>(failures.lambda.size()) != N ||
      static_cast<Eigen::Index>(failures.gamma.size()) != N) {
    add(IssueSeverity::Violation, "failure-count", -1, -1, "failure model must cover every subsystem");
  } else {
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto s = system.subsystems[i].input_dim;
      const std::string tag = "subsystem " + std::to_string(i);
      const auto& lam = failures.lambda[i];
      const auto& gam = failures.gamma[i];
      if (lam.size() != s || gam.size() != s) {
        add(IssueSeverity::Violation, "failure-shape", i, -1, tag + ": lambda and gamma need s_i entries");
        continue;
      }
      for (Eigen::Index j = 0; j < s; ++j) {
        if (!(lam(j) > Scalar(0)))
          add(IssueSeverity::Violation, "lambda", i, j,
              tag + ": lambda[" + std::to_string(j) + "] must be positive");
        if (!(gam(j) >= Scalar(0)))
          add(IssueSeverity::Violation, "gamma", i, j,
              tag + ": gamma[" + std::to_string(j) + "] must be nonnegative");
      }
    }
  }
  return report;
}

/// True when outage of actuator j of subsystem i lies inside the declared envelope.
template <typename Scalar>
bool outage_admissible(const FailureModel<Scalar>& failures, Eigen::Index i, Eigen::Index j) {
  return failures.gamma[i](j) >= failures.lambda[i](j);
}

using SimplexPointd = SimplexPoint<double>;
using PolytopicSubsystemd = PolytopicSubsystem<double>;
using Linkd = Link<double>;
using InterconnectedSystemd = InterconnectedSystem<double>;
using FailureModeld = FailureModel<double>;
using CostSpecd = CostSpec<double>;

}  // namespace rdgcc
