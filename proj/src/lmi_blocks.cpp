#include "rdgcc/lmi_blocks.hpp"

#include <string>

namespace rdgcc {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

MatrixXd identity(Index n) { return MatrixXd::Identity(n, n); }

MatrixXd inverse_coupling(const InterconnectedSystemd& system, Index i) {
  const MatrixXd w = coupling_matrix(system, i);
  if (!is_positive_definite(w))
    throw AssumptionViolation("assumption A2 violated: coupling matrix W_" + std::to_string(i) +
                              " is not positive definite");
  return w.llt().solve(identity(w.rows()));
}

void require_negative_definite(const MatrixXd& q, const std::string& where) {
  if (!is_negative_definite(q)) throw std::invalid_argument(where + ": Q must be negative definite");
}

}  // namespace

MatrixXd LmiBlocks::aggregate_q() const {
  const MatrixXd q = QBlocks<double>{Q11, Q21, Q22}.aggregate();
  const Index a = q.rows(), b = Q33.rows();
  MatrixXd out = MatrixXd::Zero(a + b, a + b);
  out.topLeftCorner(a, a) = q;
  out.bottomRightCorner(b, b) = Q33;
  return out;
}

LmiBlocks stability_blocks(const InterconnectedSystemd& system, Index i) {
  const auto& sub = system.subsystems.at(i);
  const Index n = sub.state_dim;
  LmiBlocks out;
  out.G = system.stacked_gain(i);
  const Index g = out.G.cols();
  out.C = identity(n);
  out.Q11 = -identity(g);
  out.Q21 = MatrixXd::Zero(n, g);
  out.Q22 = -inverse_coupling(system, i);
  out.Q33 = MatrixXd(0, 0);
  return out;
}

LmiBlocks reliable_blocks(const InterconnectedSystemd& system, const CostSpecd& cost, const FailureModeld& failures,
                          Index i) {
  const auto& sub = system.subsystems.at(i);
  const Index n = sub.state_dim;
  const Index s = sub.input_dim;
  const MatrixXd& R = cost.R.at(i);
  const MatrixXd& Q = cost.Q.at(i);
  const MatrixXd I_s = identity(s);
  if (!is_negative_definite((R - I_s).eval()))
    throw AssumptionViolation("assumption A3 violated: R_" + std::to_string(i) +
                              " - I must be negative definite for reliable synthesis; the control weight "
                              "cannot be chosen freely when actuator failures are admitted");
  const MatrixXd Lambda = failures.Lambda(i);
  const MatrixXd Gamma = failures.Gamma(i);

  LmiBlocks out;
  out.G = system.stacked_gain(i);
  const Index g = out.G.cols();

  Eigen::FullPivLU<MatrixXd> lu(I_s - R);
  if (!lu.isInvertible()) throw AssumptionViolation("I - R_" + std::to_string(i) + " is singular");
  const MatrixXd input_scale = (I_s + lu.solve(R)) * Lambda;
  for (Index k = 0; k < sub.vertex_count(); ++k) {
    const MatrixXd& B = sub.vertex_B[k];
    MatrixXd e(n, g + s);
    e << out.G, B;
    out.E.push_back(std::move(e));
    out.Bhat.push_back(B * input_scale);
  }

  out.F.resize(3 * s, s);
  out.F << Lambda, Gamma, R * Lambda;
  out.C.resize(2 * n, n);
  out.C << identity(n), identity(n);

  out.Q11 = MatrixXd::Zero(g + s, g + s);
  out.Q11.topLeftCorner(g, g) = -identity(g);
  out.Q11.bottomRightCorner(s, s) = R - I_s;
  out.Q21 = MatrixXd::Zero(2 * n, g + s);
  out.Q22 = MatrixXd::Zero(2 * n, 2 * n);
  out.Q22.topLeftCorner(n, n) = -Q.llt().solve(identity(n));
  out.Q22.bottomRightCorner(n, n) = -inverse_coupling(system, i);
  out.Q33 = MatrixXd::Zero(3 * s, 3 * s);
  out.Q33.topLeftCorner(s, s) = -R.llt().solve(I_s);
  out.Q33.block(s, s, s, s) = -I_s;
  out.Q33.bottomRightCorner(s, s) = R - I_s;
  return out;
}

std::string lyapunov_id(Index i, Index k, bool parameter_independent) {
  if (parameter_independent) return "Y[" + std::to_string(i) + "]";
  return "Y[" + std::to_string(i) + "," + std::to_string(k) + "]";
}
std::string slack_id(Index i) { return "V[" + std::to_string(i) + "]"; }
std::string gain_id(Index i) { return "N[" + std::to_string(i) + "]"; }

namespace {

void declare_slack(AffineLmi& lmi, const SlackVariableIds& ids, Index n, Index s) {
  lmi.declare({ids.Y, n, n, VariableKind::SymmetricPositiveDefinite});
  lmi.declare({ids.V, n, n, VariableKind::General});
  if (!ids.N.empty()) lmi.declare({ids.N, s, n, VariableKind::General});
}

// Rows 0, 1 and the last row of the slack main inequality:
// -(V + V^T); A V + Y + B N, -Y; ...; V, 0, ..., -Y.
void add_slack_frame(AffineLmi& lmi, const MatrixXd& A, const MatrixXd& B, const SlackVariableIds& ids, Index last) {
  const Index n = A.rows();
  lmi.add_left(ids.V, -identity(n), 0, 0);
  lmi.add_left(ids.V, A, 1, 0);
  lmi.add_left(ids.Y, identity(n), 1, 0);
  if (!ids.N.empty()) lmi.add_left(ids.N, B, 1, 0);
  lmi.add_left(ids.Y, -0.5 * identity(n), 1, 1);
  lmi.add_left(ids.V, identity(n), last, 0);
  lmi.add_left(ids.Y, -0.5 * identity(n), last, last);
}

}  // namespace

LmiPair slack_vertex_lmis(const MatrixXd& A_k, const MatrixXd& B_k, const MatrixXd& G, const MatrixXd& C,
                              const QBlocks<double>& q, const SlackVariableIds& ids, double strictness) {
  const Index n = A_k.rows();
  const Index s = B_k.cols();
  const Index g = G.cols();
  const Index c = C.rows();
  if (A_k.cols() != n || B_k.rows() != n || G.rows() != n || C.cols() != n || q.Q11.rows() != g ||
      q.Q22.rows() != c || q.Q21.rows() != c || q.Q21.cols() != g)
    throw std::invalid_argument("slack_vertex_lmis: dimension mismatch");
  require_negative_definite(q.aggregate(), "slack_vertex_lmis");

  LmiPair out{AffineLmi("main:" + ids.Y, {n, n, g, c, n}, strictness),
              AffineLmi("aux:" + ids.Y, {n, g, c}, strictness)};
  auto& main = out.main;
  declare_slack(main, ids, n, s);
  add_slack_frame(main, A_k, B_k, ids, 4);
  main.add_constant(2, 1, G.transpose());
  main.add_constant(2, 2, q.Q11);
  main.add_left(ids.V, C, 3, 0);
  main.add_constant(3, 2, q.Q21);
  main.add_constant(3, 3, q.Q22);

  auto& aux = out.auxiliary;
  aux.declare({ids.Y, n, n, VariableKind::SymmetricPositiveDefinite});
  aux.add_left(ids.Y, -0.5 * identity(n), 0, 0);
  aux.add_constant(1, 0, G.transpose());
  aux.add_constant(1, 1, q.Q11);
  aux.add_constant(2, 1, q.Q21);
  aux.add_constant(2, 2, q.Q22);
  return out;
}

std::vector<LmiPair> build_stability_lmis(const InterconnectedSystemd& system, Index i,
                                          const LmiBuildOptions& options) {
  const auto& sub = system.subsystems.at(i);
  const LmiBlocks blocks = stability_blocks(system, i);
  const QBlocks<double> q{blocks.Q11, blocks.Q21, blocks.Q22};
  const Index n = sub.state_dim;
  const Index g = blocks.G.cols();

  std::vector<LmiPair> out;
  for (Index k = 0; k < sub.vertex_count(); ++k) {
    SlackVariableIds ids{lyapunov_id(i, k, options.parameter_independent), slack_id(i),
                         options.fix_zero_gain ? std::string() : gain_id(i)};
    LmiPair pair = slack_vertex_lmis(sub.vertex_A[k], sub.vertex_B[k], blocks.G, blocks.C, q, ids,
                                         options.strictness);
    if (!options.full_auxiliary) {
      AffineLmi aux("aux:" + ids.Y, {n, g}, options.strictness);
      aux.declare({ids.Y, n, n, VariableKind::SymmetricPositiveDefinite});
      aux.add_left(ids.Y, -0.5 * identity(n), 0, 0);
      aux.add_constant(1, 0, blocks.G.transpose());
      aux.add_constant(1, 1, blocks.Q11);
      pair.auxiliary = std::move(aux);
    }
    out.push_back(std::move(pair));
  }
  return out;
}

std::vector<LmiPair> build_reliable_lmis(const InterconnectedSystemd& system, const CostSpecd& cost,
                                         const FailureModeld& failures, Index i, const LmiBuildOptions& options) {
  const auto& sub = system.subsystems.at(i);
  const LmiBlocks blocks = reliable_blocks(system, cost, failures, i);
  require_negative_definite(blocks.aggregate_q(), "build_reliable_lmis");
  const Index n = sub.state_dim;
  const Index s = sub.input_dim;
  const Index e = blocks.Q11.rows();

  std::vector<LmiPair> out;
  for (Index k = 0; k < sub.vertex_count(); ++k) {
    SlackVariableIds ids{lyapunov_id(i, k, options.parameter_independent), slack_id(i),
                         options.fix_zero_gain ? std::string() : gain_id(i)};
    LmiPair pair{AffineLmi("main:" + ids.Y, {n, n, e, 2 * n, 3 * s, n}, options.strictness),
                 AffineLmi("aux:" + ids.Y, {n, e}, options.strictness)};
    auto& main = pair.main;
    declare_slack(main, ids, n, s);
    add_slack_frame(main, sub.vertex_A[k], blocks.Bhat[k], ids, 5);
    main.add_constant(2, 1, blocks.E[k].transpose());
    main.add_constant(2, 2, blocks.Q11);
    main.add_left(ids.V, blocks.C, 3, 0);
    main.add_constant(3, 3, blocks.Q22);
    if (!ids.N.empty()) main.add_left(ids.N, blocks.F, 4, 0);
    main.add_constant(4, 4, blocks.Q33);

    auto& aux = pair.auxiliary;
    aux.declare({ids.Y, n, n, VariableKind::SymmetricPositiveDefinite});
    aux.add_left(ids.Y, -0.5 * identity(n), 0, 0);
    aux.add_constant(1, 0, blocks.E[k].transpose());
    aux.add_constant(1, 1, blocks.Q11);
    out.push_back(std::move(pair));
  }
  return out;
}

AffineLmi build_trace_epigraph(const VariableDecl& Y, const VariableDecl& Z) {
  if (!Y.symmetric() || !Z.symmetric() || Y.rows != Z.rows)
    throw std::invalid_argument("build_trace_epigraph: Y and Z must be symmetric of equal size");
  const Index n = Y.rows;
  AffineLmi lmi("epigraph:" + Z.id, {n, n}, 0.0);
  lmi.declare(Y);
  lmi.declare(Z);
  lmi.add_left(Z.id, -0.5 * identity(n), 0, 0);
  lmi.add_constant(1, 0, -identity(n));
  lmi.add_left(Y.id, -0.5 * identity(n), 1, 1);
  return lmi;
}

}  // namespace rdgcc
