#pragma once

#include "rdgcc/affine_lmi.hpp"
#include "rdgcc/errors.hpp"
#include "rdgcc/linalg.hpp"
#include "rdgcc/model.hpp"

#include <string>
#include <vector>

namespace rdgcc {

/// Lower-left partition of a negative definite Q = [[Q11, *], [Q21, Q22]].
template <typename Scalar>
struct QBlocks {
  MatrixX<Scalar> Q11;
  MatrixX<Scalar> Q21;
  MatrixX<Scalar> Q22;

  MatrixX<Scalar> aggregate() const {
    const auto a = Q11.rows(), b = Q22.rows();
    MatrixX<Scalar> q = MatrixX<Scalar>::Zero(a + b, a + b);
    q.topLeftCorner(a, a) = Q11;
    q.bottomRightCorner(b, b) = Q22;
    q.bottomLeftCorner(b, a) = Q21;
    q.topRightCorner(a, b) = Q21.transpose();
    return q;
  }
};

/// [[(A+BK)^T X + (*), *, *], [G^T X, Q11, *], [C, Q21, Q22]].
template <typename Scalar>
MatrixX<Scalar> primal_inequality(const MatrixX<Scalar>& A, const MatrixX<Scalar>& B, const MatrixX<Scalar>& K,
                                const MatrixX<Scalar>& X, const MatrixX<Scalar>& G, const MatrixX<Scalar>& C,
                                const QBlocks<Scalar>& q) {
  const auto n = A.rows();
  const auto g = G.cols();
  const auto c = C.rows();
  if (A.cols() != n || B.rows() != n || K.rows() != B.cols() || K.cols() != n || X.rows() != n || X.cols() != n ||
      G.rows() != n || C.cols() != n || q.Q11.rows() != g || q.Q11.cols() != g || q.Q21.rows() != c ||
      q.Q21.cols() != g || q.Q22.rows() != c || q.Q22.cols() != c)
    throw std::invalid_argument("primal_inequality: dimension mismatch");
  if (!is_symmetric(X, 1e-10)) throw std::invalid_argument("primal_inequality: X must be symmetric");
  const MatrixX<Scalar> closed = A + B * K;
  MatrixX<Scalar> m(n + g + c, n + g + c);
  place_symmetric(m, 0, 0, (closed.transpose() * X + X * closed).eval());
  place_symmetric(m, n, 0, (G.transpose() * X).eval());
  place_symmetric(m, n + g, 0, C);
  place_symmetric(m, n, n, q.Q11);
  place_symmetric(m, n + g, n, q.Q21);
  place_symmetric(m, n + g, n + g, q.Q22);
  return m;
}

/// Per-subsystem stability block: primal_inequality with C = I, Q11 = -I, Q21 = 0, Q22 = -W_i^{-1}.
template <typename Scalar>
MatrixX<Scalar> stability_inequality(const MatrixX<Scalar>& A, const MatrixX<Scalar>& B, const MatrixX<Scalar>& K,
                                     const MatrixX<Scalar>& X, const MatrixX<Scalar>& stacked_gain,
                                     const MatrixX<Scalar>& coupling) {
  const auto n = A.rows();
  const auto g = stacked_gain.cols();
  QBlocks<Scalar> q{-MatrixX<Scalar>::Identity(g, g), MatrixX<Scalar>::Zero(n, g),
                    -coupling.ldlt().solve(MatrixX<Scalar>::Identity(n, n))};
  return primal_inequality(A, B, K, X, stacked_gain, MatrixX<Scalar>::Identity(n, n).eval(), q);
}

/// Reliable guaranteed-cost certificate for one subsystem at one parameter value:
/// [[Xi, *, *], [G^T X, -I, *], [B^T X + R Lambda K, 0, R - I]] with
/// Xi = (A + B Lambda K)^T X + (*) + W + Q + K^T Gamma^2 K + K^T Lambda R Lambda K.
template <typename Scalar>
MatrixX<Scalar> reliable_inequality(const MatrixX<Scalar>& A, const MatrixX<Scalar>& B, const MatrixX<Scalar>& K,
                                    const MatrixX<Scalar>& X, const MatrixX<Scalar>& stacked_gain,
                                    const MatrixX<Scalar>& coupling, const MatrixX<Scalar>& Q,
                                    const MatrixX<Scalar>& R, const MatrixX<Scalar>& Lambda,
                                    const MatrixX<Scalar>& Gamma) {
  const auto n = A.rows();
  const auto s = B.cols();
  const auto g = stacked_gain.cols();
  const MatrixX<Scalar> closed = A + B * Lambda * K;
  MatrixX<Scalar> xi = closed.transpose() * X + X * closed + coupling + Q + K.transpose() * Gamma * Gamma * K +
                       K.transpose() * Lambda * R * Lambda * K;
  MatrixX<Scalar> m = MatrixX<Scalar>::Zero(n + g + s, n + g + s);
  place_symmetric(m, 0, 0, symmetrize(xi));
  place_symmetric(m, n, 0, (stacked_gain.transpose() * X).eval());
  place_symmetric(m, n + g, 0, (B.transpose() * X + R * Lambda * K).eval());
  place_symmetric(m, n, n, (-MatrixX<Scalar>::Identity(g, g)).eval());
  place_symmetric(m, n + g, n + g, (R - MatrixX<Scalar>::Identity(s, s)).eval());
  return m;
}

/// Structured data for one subsystem's vertex LMIs.
struct LmiBlocks {
  Eigen::MatrixXd G;                 // stacked coupling gain, n_i x (N-1) l_i
  Eigen::MatrixXd C;                 // I (stability) or (I; I) (reliable)
  Eigen::MatrixXd Q11, Q21, Q22, Q33;
  std::vector<Eigen::MatrixXd> E;     // reliable: (G_i, B_ik) per vertex
  std::vector<Eigen::MatrixXd> Bhat;  // reliable: B_ik (I + (I - R_i)^{-1} R_i) Lambda_i per vertex
  Eigen::MatrixXd F;                  // reliable: (Lambda_i; Gamma_i; R_i Lambda_i), 3 s_i x s_i

  /// Aggregate Q of the context: [[Q11, *], [Q21, Q22]] plus Q33 on the diagonal when present.
  Eigen::MatrixXd aggregate_q() const;
};

LmiBlocks stability_blocks(const InterconnectedSystemd& system, Eigen::Index i);
LmiBlocks reliable_blocks(const InterconnectedSystemd& system, const CostSpecd& cost, const FailureModeld& failures,
                          Eigen::Index i);

struct SlackVariableIds {
  std::string Y;
  std::string V;
  std::string N;  // empty: gain fixed to zero
};

struct LmiPair {
  AffineLmi main;
  AffineLmi auxiliary;
};

struct LmiBuildOptions {
  double strictness = 1e-6;
  /// One Y_i shared by all vertices instead of Y_ik.
  bool parameter_independent = false;
  /// Emit the 3x3 auxiliary form instead of the truncated 2x2 one (stability context).
  bool full_auxiliary = false;
  /// Drop N_i so the recovered gain is zero (open-loop certificate).
  bool fix_zero_gain = false;
};

std::string lyapunov_id(Eigen::Index i, Eigen::Index k, bool parameter_independent);
std::string slack_id(Eigen::Index i);
std::string gain_id(Eigen::Index i);

/// Slack-variable vertex LMI pair: the 5-block main inequality and the 3-block auxiliary one.
LmiPair slack_vertex_lmis(const Eigen::MatrixXd& A_k, const Eigen::MatrixXd& B_k, const Eigen::MatrixXd& G,
                              const Eigen::MatrixXd& C, const QBlocks<double>& q, const SlackVariableIds& ids,
                              double strictness = 1e-6);

/// One (main, auxiliary) pair per vertex for subsystem i, sharing V_i and N_i.
std::vector<LmiPair> build_stability_lmis(const InterconnectedSystemd& system, Eigen::Index i,
                                          const LmiBuildOptions& options = {});
std::vector<LmiPair> build_reliable_lmis(const InterconnectedSystemd& system, const CostSpecd& cost,
                                         const FailureModeld& failures, Eigen::Index i,
                                         const LmiBuildOptions& options = {});

/// [[Z, I], [I, Y]] >= 0, written as -[[Z, I], [I, Y]] <= 0.
AffineLmi build_trace_epigraph(const VariableDecl& Y, const VariableDecl& Z);

}  // namespace rdgcc
