#include "rdgcc/verify.hpp"

#include "rdgcc/errors.hpp"
#include "rdgcc/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace rdgcc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void VerificationReport::merge(const VerificationReport& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
  vacuous = vacuous || other.vacuous;
  if (!other.note.empty()) note += (note.empty() ? "" : "; ") + other.note;
}

bool VerificationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::size_t VerificationReport::failures() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const Check& c) { return !c.pass; }));
}

std::map<std::string, double> VerificationReport::worst_by_category() const {
  std::map<std::string, double> out;
  for (const auto& c : checks) {
    auto [it, inserted] = out.emplace(c.category, c.value);
    if (!inserted) it->second = std::max(it->second, c.value);
  }
  return out;
}

SchurOutcome schur_oracle(const MatrixXd& M, Index split) {
  if (M.rows() != M.cols() || split <= 0 || split >= M.rows())
    throw std::invalid_argument("schur_oracle: bad split");
  if (!is_symmetric(M, 1e-12)) throw std::invalid_argument("schur_oracle: matrix not symmetric");
  const Index b = M.rows() - split;
  const MatrixXd p1 = M.topLeftCorner(split, split);
  const MatrixXd p2 = M.topRightCorner(split, b);
  const MatrixXd p3 = M.bottomRightCorner(b, b);
  SchurOutcome out;
  out.direct = max_eigenvalue(M) < 0;
  Eigen::FullPivLU<MatrixXd> lu(p3);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) return out;
  const MatrixXd complement = symmetrize(p1 - p2 * lu.solve(p2.transpose()));
  out.via_complement = max_eigenvalue(p3) < 0 && max_eigenvalue(complement) < 0;
  return out;
}

MatrixXd numerical_null_space(const MatrixXd& m) { return null_space(m, 1e-10); }

namespace {

bool near_threshold(const MatrixXd& m) {
  if (m.rows() == 0 || m.cwiseAbs().maxCoeff() == 0.0) return false;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  const double cut = 1e-10 * sv(0);
  for (Index k = 0; k < sv.size(); ++k)
    if (sv(k) > cut / 100 && sv(k) < cut * 100) return true;
  return false;
}

double projected_max(const MatrixXd& psi, const MatrixXd& basis) {
  if (basis.cols() == 0) return -std::numeric_limits<double>::infinity();
  return max_eigenvalue(symmetrize(basis.transpose() * psi * basis));
}

}  // namespace

ProjectionOutcome projection_oracle(const MatrixXd& psi, const MatrixXd& P, const MatrixXd& Q,
                                    const SolverOptions& options) {
  const Index m = psi.rows();
  if (psi.cols() != m || P.cols() != m || Q.cols() != m)
    throw std::invalid_argument("projection_oracle: dimension mismatch");
  if (!is_symmetric(psi, 1e-12)) throw std::invalid_argument("projection_oracle: Psi not symmetric");

  ProjectionOutcome out;
  out.rhs_margin = std::max(projected_max(psi, numerical_null_space(P)), projected_max(psi, numerical_null_space(Q)));
  out.rhs = out.rhs_margin < 0;
  out.clustered = near_threshold(P) || near_threshold(Q);

  AffineLmi lmi("projection", {m}, 0.0);
  lmi.declare({"X", Q.rows(), P.rows(), VariableKind::General});
  lmi.add_constant(0, 0, psi);
  lmi.add_term("X", Q.transpose(), P, 0, 0);
  SdpProblem problem;
  problem.add_constraint(std::move(lmi));
  const SdpSolution sol = solve(problem, options);
  out.lhs_margin = sol.margin;
  out.lhs_decided = sol.status != SdpStatus::Inconclusive;
  out.lhs = sol.status == SdpStatus::Feasible && sol.max_residual < 0;
  return out;
}

std::vector<GridPoint> simplex_grid(Index vertices, const GridOptions& options) {
  if (vertices < 1) throw std::invalid_argument("simplex_grid: need at least one vertex");
  std::vector<GridPoint> out;
  for (Index k = 0; k < vertices; ++k) out.push_back({SimplexPointd::vertex(vertices, k), "vertex " + std::to_string(k)});
  if (vertices == 1) return out;
  if (options.midpoints)
    for (Index a = 0; a < vertices; ++a)
      for (Index b = a + 1; b < vertices; ++b) {
        VectorXd w = VectorXd::Zero(vertices);
        w(a) = w(b) = 0.5;
        out.push_back({SimplexPointd(w), "midpoint " + std::to_string(a) + "-" + std::to_string(b)});
      }
  std::mt19937_64 rng(options.seed);
  for (int s = 0; s < options.interior_samples; ++s)
    out.push_back({random_simplex_point(rng, vertices), "sample " + std::to_string(s)});
  return out;
}

std::vector<std::pair<VectorXd, std::string>> failure_extremes(const VectorXd& lambda, const VectorXd& gamma) {
  if (lambda.size() != gamma.size()) throw std::invalid_argument("failure_extremes: size mismatch");
  const Index s = lambda.size();
  std::vector<std::vector<double>> options(s);
  for (Index j = 0; j < s; ++j) {
    std::set<double> values{lambda(j) - gamma(j), lambda(j), lambda(j) + gamma(j)};
    if (gamma(j) >= lambda(j)) values.insert(0.0);
    options[j].assign(values.begin(), values.end());
  }
  std::vector<std::pair<VectorXd, std::string>> out;
  std::vector<std::size_t> pick(s, 0);
  while (true) {
    VectorXd d(s);
    std::ostringstream label;
    label << "lambda~=(";
    for (Index j = 0; j < s; ++j) {
      d(j) = options[j][pick[j]];
      label << (j ? "," : "") << d(j);
    }
    label << ")";
    out.emplace_back(d, label.str());
    Index j = 0;
    while (j < s && ++pick[j] == options[j].size()) pick[j++] = 0;
    if (j == s) break;
  }
  return out;
}

namespace {

std::vector<AffineLmi> roundtrip_lmis(const SlackInstance& inst, double strictness) {
  std::vector<AffineLmi> out;
  for (std::size_t k = 0; k < inst.A.size(); ++k) {
    SlackVariableIds ids{"Y[" + std::to_string(k) + "]", "V", "N"};
    auto pair = slack_vertex_lmis(inst.A[k], inst.B[k], inst.G, inst.C, inst.q, ids, strictness);
    out.push_back(std::move(pair.main));
    out.push_back(std::move(pair.auxiliary));
  }
  return out;
}

// Reverse direction for one vertex: solve the primal inequality in (Y = X^{-1}, M = K Y) together with the
// auxiliary condition, then look for a slack V with Y fixed and N = K V.
void reverse_direction(const SlackInstance& inst, const RoundtripOptions& options, VerificationReport& report) {
  const MatrixXd& A = inst.A[0];
  const MatrixXd& B = inst.B[0];
  const Index n = A.rows(), s = B.cols(), g = inst.G.cols(), c = inst.C.rows();

  AffineLmi primal("primal-congruent", {n, g, c}, options.strictness);
  primal.declare({"Y", n, n, VariableKind::SymmetricPositiveDefinite});
  primal.declare({"M", s, n, VariableKind::General});
  primal.add_left("Y", A, 0, 0);
  primal.add_left("M", B, 0, 0);
  primal.add_constant(1, 0, inst.G.transpose());
  primal.add_left("Y", inst.C, 2, 0);
  primal.add_constant(1, 1, inst.q.Q11);
  primal.add_constant(2, 1, inst.q.Q21);
  primal.add_constant(2, 2, inst.q.Q22);
  SlackVariableIds aux_ids{"Y", "V", "N"};
  AffineLmi aux = slack_vertex_lmis(A, B, inst.G, inst.C, inst.q, aux_ids, options.strictness).auxiliary;

  SdpProblem first;
  first.add_constraint(primal);
  first.add_constraint(aux);
  const SdpSolution s1 = solve(first, options.solver);
  if (s1.status != SdpStatus::Feasible) {
    report.add({"roundtrip-reverse", "primal solve", "vertex 0", s1.margin, false});
    return;
  }
  const MatrixXd Y = s1.assignment.at("Y");
  const MatrixXd K = recover_gain(s1.assignment.at("M"), Y);
  const MatrixXd X = symmetrize(Y.llt().solve(MatrixXd::Identity(n, n)));
  const double primal_value = max_eigenvalue(primal_inequality(A, B, K, X, inst.G, inst.C, inst.q));
  report.add({"roundtrip-reverse", "primal inequality at (X, K)", "vertex 0", primal_value, primal_value < 0});

  SlackVariableIds ids{"Y", "V", ""};
  AffineLmi main = slack_vertex_lmis((A + B * K).eval(), MatrixXd::Zero(n, s), inst.G, inst.C, inst.q, ids,
                                         options.strictness)
                       .main;
  SdpProblem second;
  second.add_constraint(substitute(main, {{"Y", Y}}));
  const SdpSolution s2 = solve(second, options.solver);
  report.add({"roundtrip-reverse", "slack V with Y = X^{-1}, N = K V", "vertex 0", s2.max_residual,
              s2.status == SdpStatus::Feasible && s2.max_violation <= 0});
}

}  // namespace

VerificationReport slack_roundtrip(const SlackInstance& inst, const RoundtripOptions& options) {
  if (inst.A.empty() || inst.A.size() != inst.B.size())
    throw std::invalid_argument("slack_roundtrip: need matching A and B vertex lists");
  if (!is_negative_definite(inst.q.aggregate()))
    throw std::invalid_argument("slack_roundtrip: Q must be negative definite");
  const Index L = static_cast<Index>(inst.A.size());
  const Index n = inst.A[0].rows();

  SdpProblem problem;
  for (auto& lmi : roundtrip_lmis(inst, options.strictness)) problem.add_constraint(std::move(lmi));
  const SdpSolution sol = solve(problem, options.solver);
  VerificationReport report;
  if (sol.status != SdpStatus::Feasible) {
    report.vacuous = true;
    report.note = "slack LMIs " + to_string(sol.status) + "; round-trip vacuous";
    return report;
  }

  const MatrixXd V = sol.assignment.at("V");
  const MatrixXd N = sol.assignment.at("N");
  const MatrixXd K = recover_gain(N, V);
  std::vector<MatrixXd> Y;
  for (Index k = 0; k < L; ++k) Y.push_back(sol.assignment.at("Y[" + std::to_string(k) + "]"));
  const double recovery = (K * V - N).norm();
  report.add({"gain-recovery", "|K V - N|", "-", recovery, recovery <= 1e-9 * (1 + N.norm())});

  GridOptions grid;
  grid.interior_samples = options.interior_samples;
  grid.seed = options.seed;
  grid.midpoints = false;
  for (const auto& point : simplex_grid(L, grid)) {
    MatrixXd A = MatrixXd::Zero(n, n), B = MatrixXd::Zero(n, inst.B[0].cols()), y = MatrixXd::Zero(n, n);
    for (Index k = 0; k < L; ++k) {
      A += point.alpha[k] * inst.A[k];
      B += point.alpha[k] * inst.B[k];
      y += point.alpha[k] * Y[k];
    }
    const MatrixXd X = symmetrize(y.llt().solve(MatrixXd::Identity(n, n)));
    const double value = max_eigenvalue(primal_inequality(A, B, K, X, inst.G, inst.C, inst.q));
    const bool vertex = point.label.rfind("vertex", 0) == 0;
    report.add({vertex ? "roundtrip-vertex" : "roundtrip-interior", "primal inequality", point.label, value, value < 0});
  }
  if (L == 1) reverse_direction(inst, options, report);
  return report;
}

namespace {

std::string describe(const std::string& point, const std::string& extra = {}) {
  return extra.empty() ? point : point + "; " + extra;
}

}  // namespace

VerificationReport verify_closed_loop(const SynthesisResult& result, const InterconnectedSystemd& system,
                                      const CostSpecd* cost, const FailureModeld* failures, const GridOptions& grid) {
  const bool reliable = result.mode == SynthesisMode::ReliableGcc;
  if (reliable && (!cost || !failures))
    throw std::invalid_argument("verify_closed_loop: reliable results need cost and failure data");
  VerificationReport report;
  if (static_cast<Index>(result.subsystems.size()) != system.size()) {
    report.add({"structure", "subsystem count", "-", 0.0, false});
    return report;
  }
  for (const auto& sub : result.subsystems) {
    const bool shaped = sub.ok() && sub.K.rows() == system.subsystems[sub.index].input_dim &&
                        sub.K.cols() == system.subsystems[sub.index].state_dim &&
                        static_cast<Index>(sub.Y.size()) == system.vertex_count() && sub.X.size() == sub.Y.size();
    report.add({"structure", "subsystem " + std::to_string(sub.index) + " solved with consistent shapes", "-", 0.0,
                shaped});
  }
  if (!report.passed()) return report;

  const auto points = simplex_grid(system.vertex_count(), grid);
  for (Index i = 0; i < system.size(); ++i) {
    const auto& sol = result.subsystems[i];
    const auto& plant = system.subsystems[i];
    const std::string tag = "subsystem " + std::to_string(i);

    const double recovery = (sol.K * sol.V - sol.N).norm();
    report.add({"gain-recovery", tag + ": |K V - N|", "-", recovery, recovery <= 1e-9 * (1 + sol.N.norm())});
    for (std::size_t k = 0; k < sol.X.size(); ++k) {
      const double y_residual = (sol.X[k] * sol.Y[k] - MatrixXd::Identity(plant.state_dim, plant.state_dim)).norm();
      report.add({"lyapunov-inverse", tag + ": |X Y - I|", "vertex " + std::to_string(k), y_residual,
                  y_residual <= 1e-8});
      const double lowest = min_eigenvalue(sol.X[k]);
      report.add({"lyapunov-spd", tag + ": -lambda_min(X)", "vertex " + std::to_string(k), -lowest, lowest > 0});
    }

    const MatrixXd G = system.stacked_gain(i);
    const MatrixXd W = coupling_matrix(system, i);
    std::vector<std::pair<VectorXd, std::string>> extremes;
    if (reliable)
      extremes = failure_extremes(failures->lambda[i], failures->gamma[i]);
    else
      extremes.emplace_back(VectorXd::Ones(plant.input_dim), "nominal");

    for (const auto& point : points) {
      const auto [A, B] = evaluate_at_alpha(plant, point.alpha);
      const MatrixXd X = certified_lyapunov_matrix(sol, point.alpha);
      if (reliable) {
        const double value = max_eigenvalue(reliable_inequality(A, B, sol.K, X, G, W, cost->Q[i], cost->R[i],
                                                                failures->Lambda(i), failures->Gamma(i)));
        report.add({"reliable-certificate", tag, point.label, value, value < 0});
      } else {
        const double value = max_eigenvalue(stability_inequality(A, B, sol.K, X, G, W));
        report.add({"stability-inequality", tag, point.label, value, value < 0});
      }
      for (const auto& [d, label] : extremes) {
        const double value = spectral_abscissa((A + B * d.asDiagonal() * sol.K).eval());
        report.add({"closed-loop-eigen", tag, describe(point.label, label), value, value < 0});
      }
    }
  }
  return report;
}

}  // namespace rdgcc
