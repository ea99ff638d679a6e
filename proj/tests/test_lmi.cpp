#include "helpers.hpp"

#include "rdgcc/fixtures.hpp"
#include "rdgcc/lmi_blocks.hpp"

#include <doctest.h>

using namespace rdgcc;
using namespace testing;

namespace {

/// Dense symmetric matrix from a lower-triangular grid of blocks.
MatrixXd dense(const std::vector<Index>& sizes, const std::vector<std::vector<MatrixXd>>& lower) {
  std::vector<Index> off{0};
  for (auto s : sizes) off.push_back(off.back() + s);
  MatrixXd m = MatrixXd::Zero(off.back(), off.back());
  for (std::size_t r = 0; r < lower.size(); ++r)
    for (std::size_t c = 0; c < lower[r].size(); ++c) {
      if (lower[r][c].size() == 0) continue;
      m.block(off[r], off[c], sizes[r], sizes[c]) = lower[r][c];
      if (r != c) m.block(off[c], off[r], sizes[c], sizes[r]) = lower[r][c].transpose();
    }
  return m;
}

MatrixXd Z(Index r, Index c) { return MatrixXd::Zero(r, c); }

}  // namespace

TEST_SUITE("lmi") {

TEST_CASE("primal_inequality: hand-assembled scalar example") {
  QBlocks<double> q{scalar(-1), scalar(0), scalar(-1)};
  const MatrixXd m = primal_inequality<double>(scalar(-1), scalar(0), scalar(0), scalar(1), scalar(0), scalar(1), q);
  const MatrixXd expected = (MatrixXd(3, 3) << -2, 0, 1, 0, -1, 0, 1, 0, -1).finished();
  CHECK(m == expected);
  // Generic (nonsymmetric) eigen routine as the independent check: eigenvalues -1 and -1.5 +- sqrt(0.25 + 1).
  const Eigen::VectorXcd ev = Eigen::EigenSolver<MatrixXd>(expected).eigenvalues();
  CHECK(ev.real().maxCoeff() == doctest::Approx(-1.5 + std::sqrt(1.25)).epsilon(1e-12));
  CHECK(ev.real().maxCoeff() < 0);
}

TEST_CASE("primal_inequality: decoupled blocks and errors") {
  const MatrixXd A = (MatrixXd(2, 2) << 0, 1, -2, -3).finished();
  QBlocks<double> q{-MatrixXd::Identity(1, 1), Z(2, 1), -MatrixXd::Identity(2, 2)};
  // Lyapunov X for this A: solve A^T X + X A = -I entrywise (column-major vec).
  Eigen::Matrix4d kron = Eigen::Matrix4d::Zero();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
          kron(a + 2 * b, c + 2 * d) = (b == d ? A(c, a) : 0.0) + (a == c ? A(d, b) : 0.0);
  const Eigen::Vector4d vec = kron.fullPivLu().solve(-Eigen::Vector4d(1, 0, 0, 1));
  const MatrixXd Xl = Eigen::Map<const Eigen::Matrix2d>(vec.data());
  CHECK((A.transpose() * Xl + Xl * A + MatrixXd::Identity(2, 2)).norm() < 1e-12);
  const MatrixXd m = primal_inequality<double>(A, Z(2, 1), Z(1, 2), Xl, Z(2, 1), Z(2, 2), q);
  CHECK(m.topLeftCorner(2, 2).isApprox(-MatrixXd::Identity(2, 2)));
  CHECK(m.topRightCorner(2, 3).norm() == 0.0);
  CHECK(max_eig(m) < 0);
  CHECK_THROWS_AS(primal_inequality<double>(A, Z(2, 1), Z(1, 3), Xl, Z(2, 1), Z(2, 2), q), std::invalid_argument);
  MatrixXd skew = Xl;
  skew(0, 1) += 1;
  CHECK_THROWS_AS(primal_inequality<double>(A, Z(2, 1), Z(1, 2), skew, Z(2, 1), Z(2, 2), q), std::invalid_argument);
}

TEST_CASE("primal_inequality: dense block-placement oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd A = random_matrix(rng, 2, 2), B = random_matrix(rng, 2, 1), K = random_matrix(rng, 1, 2);
    const MatrixXd X = random_spd(rng, 2), G = random_matrix(rng, 2, 2), C = random_matrix(rng, 2, 2);
    QBlocks<double> q{random_symmetric(rng, 2), random_matrix(rng, 2, 2), random_symmetric(rng, 2)};
    const MatrixXd m = primal_inequality<double>(A, B, K, X, G, C, q);
    const MatrixXd cl = A + B * K;
    const MatrixXd oracle =
        dense({2, 2, 2}, {{cl.transpose() * X + X * cl}, {G.transpose() * X, q.Q11}, {C, q.Q21, q.Q22}});
    CHECK((m - oracle).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("slack_vertex_lmis: scalar layout and dense oracle") {
  QBlocks<double> q{scalar(-1), scalar(0), scalar(-1)};
  const SlackVariableIds ids{"Y", "V", "N"};
  const auto pair = slack_vertex_lmis(scalar(-2), scalar(1), scalar(0.1), scalar(1), q, ids);
  CHECK(pair.main.block_sizes() == std::vector<Index>{1, 1, 1, 1, 1});
  CHECK(pair.main.size() == 5);
  CHECK(pair.auxiliary.size() == 3);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 1 + trial % 3, s = 1 + trial % 2, g = 1 + (trial / 2) % 2, c = n;
    const MatrixXd A = random_matrix(rng, n, n), B = random_matrix(rng, n, s), G = random_matrix(rng, n, g);
    const MatrixXd C = random_matrix(rng, c, n);
    QBlocks<double> qq{-random_spd(rng, g), Z(c, g), -random_spd(rng, c)};
    const auto lmis = slack_vertex_lmis(A, B, G, C, qq, ids);
    const MatrixXd Y = random_spd(rng, n), V = random_matrix(rng, n, n), N = random_matrix(rng, s, n);
    const Assignment at{{"Y", Y}, {"V", V}, {"N", N}};
    const MatrixXd oracle = dense({n, n, g, c, n}, {{-(V + V.transpose())},
                                                    {A * V + Y + B * N, -Y},
                                                    {Z(g, n), G.transpose(), qq.Q11},
                                                    {C * V, Z(c, n), qq.Q21, qq.Q22},
                                                    {V, Z(n, n), Z(n, g), Z(n, c), -Y}});
    const MatrixXd m = lmis.main.assemble(at);
    CHECK((m - oracle).cwiseAbs().maxCoeff() < 1e-13);
    const MatrixXd aux = dense({n, g, c}, {{-Y}, {G.transpose(), qq.Q11}, {Z(c, n), qq.Q21, qq.Q22}});
    CHECK((lmis.auxiliary.assemble(at) - aux).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("slack_vertex_lmis: Y = V substitution") {
  QBlocks<double> q{scalar(-1), scalar(0), scalar(-1)};
  const auto pair = slack_vertex_lmis(scalar(-2), scalar(1), scalar(0.1), scalar(1), q, {"Y", "V", "N"});
  const MatrixXd V = scalar(0.7), N = scalar(-0.3);
  const MatrixXd m = pair.main.assemble({{"Y", V}, {"V", V}, {"N", N}});
  CHECK(m(1, 0) == doctest::Approx(-2 * 0.7 + 0.7 + 1 * -0.3).epsilon(1e-15));
}

TEST_CASE("slack_vertex_lmis rejects a Q that is not negative definite") {
  QBlocks<double> q{scalar(1), scalar(0), scalar(-1)};
  CHECK_THROWS(slack_vertex_lmis(scalar(-2), scalar(1), scalar(0.1), scalar(1), q, {"Y", "V", "N"}));
}

TEST_CASE("build_stability_lmis: sizes and shared variables") {
  const auto sys = scalar_pair(-1, -2, 1, 0.1, 1.0);
  const auto pairs = build_stability_lmis(sys, 0);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].main.size() == 5);
  CHECK(pairs[0].auxiliary.size() == 2);
  for (const auto& p : pairs) {
    CHECK(p.main.find_variable(slack_id(0)) != nullptr);
    CHECK(p.main.find_variable(gain_id(0)) != nullptr);
  }
  CHECK(pairs[0].main.find_variable(lyapunov_id(0, 0, false)) != nullptr);
  CHECK(pairs[1].main.find_variable(lyapunov_id(0, 1, false)) != nullptr);
  CHECK(pairs[1].main.find_variable(lyapunov_id(0, 0, false)) == nullptr);

  LmiBuildOptions shared;
  shared.parameter_independent = true;
  for (const auto& p : build_stability_lmis(sys, 0, shared))
    CHECK(p.main.find_variable(lyapunov_id(0, 0, true)) != nullptr);

  LmiBuildOptions full;
  full.full_auxiliary = true;
  CHECK(build_stability_lmis(sys, 0, full)[0].auxiliary.size() == 3);

  LmiBuildOptions zero;
  zero.fix_zero_gain = true;
  CHECK(build_stability_lmis(sys, 0, zero)[0].main.find_variable(gain_id(0)) == nullptr);

  // 4 n_i + (N - 1) l_i on a larger random instance.
  std::mt19937_64 rng(2);
  const auto spec = random_actuated_fixture(rng, 3, 3, 2);
  for (Index i = 0; i < 3; ++i) {
    const auto& sub = spec.system.subsystems[i];
    CHECK(build_stability_lmis(spec.system, i)[0].main.size() == 4 * sub.state_dim + 2 * sub.coupling_dim);
  }
}

TEST_CASE("build_stability_lmis: A2 failure is an error") {
  auto sys = scalar_pair(-1, -2, 1, 0.1, 1.0);
  sys.links[{1, 0}].W = scalar(0);  // W_0 = W_10^T W_10 = 0
  CHECK_THROWS(build_stability_lmis(sys, 0));
  CHECK_NOTHROW(build_stability_lmis(sys, 1));
}

TEST_CASE("build_reliable_lmis: size 5n + (N-1)l + 4s and hand assembly") {
  const auto sys = scalar_pair(-1, -2, 1, 0.1, 0.5);
  const auto cost = scalar_cost(0.5, 0.5);
  const auto failures = FailureModeld::nominal(sys);
  const auto pairs = build_reliable_lmis(sys, cost, failures, 0);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].main.size() == 10);

  const MatrixXd Y = scalar(0.8), V = scalar(0.6), N = scalar(-0.4);
  const Assignment at{{lyapunov_id(0, 0, false), Y}, {slack_id(0), V}, {gain_id(0), N}};
  const double A = -1, B = 1, bhat = 2.0 * B;  // (1 + 0.5 / 0.5) * 1
  // Blocks: V, Y, E^T (g + s), C V (2n), F N (3s), V.
  MatrixXd oracle = MatrixXd::Zero(10, 10);
  auto put = [&](Index r, Index c, double v) {
    oracle(r, c) = v;
    oracle(c, r) = v;
  };
  put(0, 0, -2 * V(0, 0));
  put(1, 0, A * V(0, 0) + Y(0, 0) + bhat * N(0, 0));
  put(1, 1, -Y(0, 0));
  put(2, 1, 0.1);  // G^T
  put(3, 1, B);    // B^T
  put(2, 2, -1);
  put(3, 3, 0.5 - 1);
  put(4, 0, V(0, 0));
  put(5, 0, V(0, 0));
  put(4, 4, -1 / 0.5);   // -Q^{-1}
  put(5, 5, -1 / 0.25);  // -W^{-1}, W_0 = 0.5^2
  put(6, 0, 1.0 * N(0, 0));
  put(7, 0, 0.0);
  put(8, 0, 0.5 * N(0, 0));
  put(6, 6, -1 / 0.5);
  put(7, 7, -1);
  put(8, 8, 0.5 - 1);
  put(9, 0, V(0, 0));
  put(9, 9, -Y(0, 0));
  CHECK((pairs[0].main.assemble(at) - oracle).cwiseAbs().maxCoeff() < 1e-14);

  std::mt19937_64 rng(4);
  const auto spec = random_reliable_fixture(rng, 3, 3, 2);
  for (Index i = 0; i < 3; ++i) {
    const auto& sub = spec.system.subsystems[i];
    CHECK(build_reliable_lmis(spec.system, spec.cost, spec.failures, i)[0].main.size() ==
          5 * sub.state_dim + 2 * sub.coupling_dim + 4 * sub.input_dim);
  }
}

TEST_CASE("reliable blocks: Bhat identity I + (I-R)^{-1} R = (I-R)^{-1}") {
  for (double r : {0.1, 0.5, 0.9}) CHECK(1 + r / (1 - r) == doctest::Approx(1 / (1 - r)).epsilon(1e-14));
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto spec = random_reliable_fixture(rng, 2, 3, 2);
    for (Index i = 0; i < 2; ++i) {
      const auto blocks = reliable_blocks(spec.system, spec.cost, spec.failures, i);
      const MatrixXd& R = spec.cost.R[i];
      const MatrixXd I = MatrixXd::Identity(R.rows(), R.cols());
      const MatrixXd inv = (I - R).inverse();
      CHECK((I + inv * R - inv).norm() < 1e-12);
      for (Index k = 0; k < 2; ++k)
        CHECK((blocks.Bhat[k] - spec.system.subsystems[i].vertex_B[k] * inv * spec.failures.Lambda(i)).norm() <
              1e-10 * (1 + blocks.Bhat[k].norm()));
      // Aggregate Q negative definite under A2 and A3.
      CHECK(max_eig(blocks.aggregate_q()) < 0);
    }
  }
}

TEST_CASE("reliable blocks: A3 violation names the restriction") {
  const auto sys = scalar_pair(-1, -2, 1, 0.1, 0.5);
  try {
    reliable_blocks(sys, scalar_cost(0.5, 1.0), FailureModeld::nominal(sys), 0);
    FAIL("expected AssumptionViolation");
  } catch (const AssumptionViolation& e) {
    CHECK(std::string(e.what()).find("assumption A3 violated") != std::string::npos);
  }
}

TEST_CASE("trace epigraph examples") {
  const VariableDecl Yd{"Y", 2, 2, VariableKind::SymmetricPositiveDefinite};
  const VariableDecl Zd{"Z", 2, 2, VariableKind::Symmetric};
  const AffineLmi lmi = build_trace_epigraph(Yd, Zd);
  const MatrixXd I = MatrixXd::Identity(2, 2);
  // Satisfied (M <= 0) at Y = Z = I, with tr(Z) = tr(Y^{-1}).
  CHECK(lmi.max_eigenvalue({{"Y", I}, {"Z", I}}) <= 1e-14);
  // Boundary Y = 2I, Z = 0.5 I: PSD with a zero eigenvalue.
  const double boundary = lmi.max_eigenvalue({{"Y", 2 * I}, {"Z", 0.5 * I}});
  CHECK(std::abs(boundary) < 1e-14);
  const MatrixXd direct = (MatrixXd(4, 4) << 0.5, 0, 1, 0, 0, 0.5, 0, 1, 1, 0, 2, 0, 0, 1, 0, 2).finished();
  CHECK(min_eig(direct) == doctest::Approx(0.0).epsilon(1e-12));
  // Y = I, Z = 0 is infeasible.
  CHECK(lmi.max_eigenvalue({{"Y", I}, {"Z", MatrixXd::Zero(2, 2)}}) > 0.5);
}

TEST_CASE("assembled LMIs are symmetric at symmetric assignments") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto spec = random_reliable_fixture(rng, 2 + trial % 2, 3, 2);
    for (Index i = 0; i < spec.system.size(); ++i) {
      const auto& sub = spec.system.subsystems[i];
      Assignment at{{slack_id(i), random_matrix(rng, sub.state_dim, sub.state_dim)},
                    {gain_id(i), random_matrix(rng, sub.input_dim, sub.state_dim)}};
      for (Index k = 0; k < 2; ++k) at[lyapunov_id(i, k, false)] = random_spd(rng, sub.state_dim);
      for (const auto& p : build_reliable_lmis(spec.system, spec.cost, spec.failures, i)) {
        const MatrixXd m = p.main.assemble(at);
        CHECK((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-13);
      }
      for (const auto& p : build_stability_lmis(spec.system, i)) {
        const MatrixXd m = p.main.assemble(at);
        CHECK((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-13);
      }
    }
  }
}

TEST_CASE("affine lmi: declarations, basis round trip and substitution") {
  AffineLmi lmi("t", {2, 1});
  lmi.declare({"S", 2, 2, VariableKind::Symmetric});
  CHECK_THROWS(lmi.declare({"S", 3, 3, VariableKind::Symmetric}));
  CHECK_THROWS(lmi.add_constant(0, 0, (MatrixXd(2, 2) << 1, 2, 3, 4).finished()));
  lmi.add_left("S", -0.5 * MatrixXd::Identity(2, 2), 0, 0);
  lmi.declare({"g", 1, 2, VariableKind::General});
  lmi.add_left("g", MatrixXd::Identity(1, 1), 1, 0);
  lmi.add_constant(1, 1, scalar(-1));

  const VariableDecl& s = *lmi.find_variable("S");
  CHECK(s.dof() == 3);
  const MatrixXd value = (MatrixXd(2, 2) << 1, 0.25, 0.25, 3).finished();
  CHECK((s.unvectorize(s.vectorize(value)) - value).norm() < 1e-15);

  const Assignment at{{"S", value}, {"g", (MatrixXd(1, 2) << 0.5, -0.5).finished()}};
  const MatrixXd full = lmi.assemble(at);
  const AffineLmi fixed = substitute(lmi, {{"g", at.at("g")}});
  CHECK(fixed.find_variable("g") == nullptr);
  CHECK((fixed.assemble({{"S", value}}) - full).norm() < 1e-15);
  CHECK(full(2, 0) == 0.5);
  CHECK(full(0, 0) == -1.0);
}

}  // TEST_SUITE
