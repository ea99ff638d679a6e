#include "helpers.hpp"

#include "rdgcc/errors.hpp"
#include "rdgcc/fixtures.hpp"
#include "rdgcc/synthesis.hpp"
#include "rdgcc/verify.hpp"

#include <doctest.h>

using namespace rdgcc;
using namespace testing;

namespace {

double closed_loop_abscissa(const InterconnectedSystemd& sys, const SynthesisResult& result) {
  double worst = -1e300;
  for (Index i = 0; i < sys.size(); ++i)
    for (Index k = 0; k < sys.vertex_count(); ++k) {
      const auto& sub = sys.subsystems[i];
      const MatrixXd cl = sub.vertex_A[k] + sub.vertex_B[k] * result.subsystems[i].K;
      worst = std::max(worst, Eigen::EigenSolver<MatrixXd>(cl).eigenvalues().real().maxCoeff());
    }
  return worst;
}

/// Hand-built result with the given X_ik, for the bound formulas.
SynthesisResult result_with(const std::vector<std::vector<MatrixXd>>& X) {
  SynthesisResult r;
  r.mode = SynthesisMode::ReliableGcc;
  for (std::size_t i = 0; i < X.size(); ++i) {
    SubsystemSynthesis s;
    s.index = static_cast<Index>(i);
    s.status = SdpStatus::Feasible;
    s.X = X[i];
    for (const auto& x : X[i]) s.Y.push_back(x.inverse());
    r.subsystems.push_back(s);
  }
  return r;
}

}  // namespace

TEST_SUITE("synthesis") {

TEST_CASE("stability: scalar pair with W = 1 is feasible and Hurwitz at every vertex") {
  const auto sys = scalar_pair(-1, -2, 1, 0.1, 1.0);
  const auto result = synthesize_stabilizing(sys);
  REQUIRE(result.feasible());
  CHECK(closed_loop_abscissa(sys, result) < -1e-6);
  for (const auto& sub : result.subsystems) {
    CHECK((sub.K * sub.V - sub.N).norm() <= 1e-9 * (1 + sub.N.norm()));
    for (const auto& r : sub.residuals) CHECK(r.max_eigenvalue <= -r.strictness + 1e-8);
  }
}

TEST_CASE("stability: uncontrollable unstable vertex is reported per subsystem") {
  auto sys = scalar_pair(-1, -2, 1, 0.1, 1.0);
  sys.subsystems[0].vertex_A = {scalar(1), scalar(1)};
  sys.subsystems[0].vertex_B = {scalar(0), scalar(0)};
  sys.links[{0, 1}].G = scalar(2);
  const auto result = synthesize_stabilizing(sys);
  CHECK_FALSE(result.feasible());
  CHECK(result.subsystems[0].status == SdpStatus::Infeasible);
  CHECK(result.subsystems[1].ok());
  CHECK(result.failed() == std::vector<Index>{0});
}

TEST_CASE("stability: K forced to zero on an open-loop robustly stable plant") {
  const auto sys = scalar_pair(-1, -2, 1, 0.1, 1.0);
  SynthesisOptions options;
  options.fix_zero_gain = true;
  const auto result = synthesize_stabilizing(sys, options);
  REQUIRE(result.feasible());
  for (const auto& sub : result.subsystems) CHECK(sub.K.norm() == 0.0);
  // Oracle: both open-loop vertices are Hurwitz.
  CHECK(closed_loop_abscissa(sys, result) == -1.0);
}

TEST_CASE("stability: validation errors throw, trace optimisation is refused") {
  auto sys = scalar_pair(-1, -2, 1, 0.1, 1.0);
  SynthesisOptions options;
  options.optimize_trace = true;
  CHECK_THROWS_AS(synthesize_stabilizing(sys, options), InputError);
  sys.links.clear();
  CHECK_THROWS_AS(synthesize_stabilizing(sys), InputError);
}

TEST_CASE("reliable: no-failure scalar pair gives a finite nonnegative bound") {
  const auto sys = scalar_pair(-1, -2, 1, 0.1, 0.5);
  const auto result = synthesize_reliable_gcc(sys, scalar_cost(0.5, 0.5), FailureModeld::nominal(sys));
  REQUIRE(result.feasible());
  const double jbar = expected_cost_bound(result);
  CHECK(std::isfinite(jbar));
  CHECK(jbar >= 0);
}

TEST_CASE("reliable: the W = 1 variant of the scalar pair is infeasible") {
  // Frozen finding: with W_ij = 1 the reliable LMI family has no solution for this plant.
  const auto sys = scalar_pair(-1, -2, 1, 0.1, 1.0);
  const auto result = synthesize_reliable_gcc(sys, scalar_cost(0.5, 0.5), FailureModeld::nominal(sys));
  CHECK_FALSE(result.feasible());
  for (const auto& sub : result.subsystems) CHECK(sub.status == SdpStatus::Infeasible);
}

TEST_CASE("reliable: demo fixture, frozen bound values") {
  const auto demo = demo_fixture();
  // Outage of subsystem 0's actuator is admissible, so its open-loop vertices must be Hurwitz.
  for (const auto& A : demo.system.subsystems[0].vertex_A) CHECK(A(0, 0) < 0);
  const auto result = synthesize_reliable_gcc(demo.system, demo.cost, demo.failures);
  REQUIRE(result.feasible());
  CHECK(expected_cost_bound(result) == doctest::Approx(0.904175).epsilon(1e-4));
  CHECK(result.subsystems[0].K(0, 0) == doctest::Approx(-0.59153).epsilon(1e-3));
  CHECK(result.subsystems[1].K(0, 0) == doctest::Approx(-1.11738).epsilon(1e-3));
  // With u^F = 0 on subsystem 0 the closed loop is the open loop.
  for (const auto& A : demo.system.subsystems[0].vertex_A)
    CHECK(Eigen::EigenSolver<MatrixXd>(A).eigenvalues().real().maxCoeff() < 0);

  SynthesisOptions trace;
  trace.optimize_trace = true;
  const auto optimised = synthesize_reliable_gcc(demo.system, demo.cost, demo.failures, trace);
  REQUIRE(optimised.feasible());
  REQUIRE(optimised.trace_objective.has_value());
  CHECK(expected_cost_bound(optimised) < expected_cost_bound(result));
  CHECK(expected_cost_bound(optimised) == doctest::Approx(0.681).epsilon(5e-3));
  CHECK(*optimised.trace_objective >= expected_cost_bound(optimised) - 1e-6);
}

TEST_CASE("reliable: R = I fails fast with the A3 message") {
  const auto sys = scalar_pair(-1, -2, 1, 0.1, 0.5);
  try {
    synthesize_reliable_gcc(sys, scalar_cost(0.5, 1.0), FailureModeld::nominal(sys));
    FAIL("expected AssumptionViolation");
  } catch (const AssumptionViolation& e) {
    CHECK(std::string(e.what()).find("assumption A3 violated") != std::string::npos);
  }
  CHECK(synthesize_stabilizing(sys).feasible());
}

TEST_CASE("reliable: random fixtures, gain recovery and residuals") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 6; ++trial) {
    const auto spec = random_reliable_fixture(rng, 2 + trial % 2, 3, 2);
    const auto result = synthesize_reliable_gcc(spec.system, spec.cost, spec.failures);
    REQUIRE(result.feasible());
    for (const auto& sub : result.subsystems) {
      CHECK((sub.K * sub.V - sub.N).norm() <= 1e-9 * (1 + sub.N.norm()));
      for (std::size_t k = 0; k < sub.X.size(); ++k) CHECK((sub.X[k] * sub.Y[k]).isIdentity(1e-9));
    }
  }
}

TEST_CASE("parallel and serial synthesis agree exactly") {
  std::mt19937_64 rng(43);
  const auto spec = random_reliable_fixture(rng, 3, 2, 2);
  SynthesisOptions serial;
  serial.parallel = false;
  const auto a = synthesize_reliable_gcc(spec.system, spec.cost, spec.failures);
  const auto b = synthesize_reliable_gcc(spec.system, spec.cost, spec.failures, serial);
  for (std::size_t i = 0; i < a.subsystems.size(); ++i) CHECK((a.subsystems[i].K - b.subsystems[i].K).norm() == 0.0);
}

TEST_CASE("parameter-independent mode repeats one Y and is more conservative") {
  std::mt19937_64 rng(43);
  const auto spec = random_reliable_fixture(rng, 2, 2, 2);
  SynthesisOptions options;
  options.parameter_independent = true;
  const auto result = synthesize_reliable_gcc(spec.system, spec.cost, spec.failures, options);
  REQUIRE(result.feasible());
  for (const auto& sub : result.subsystems) CHECK(sub.Y[0] == sub.Y[1]);

  // Frozen finding: on the demo a common Y fails for subsystem 0 while per-vertex Y succeeds.
  const auto demo = demo_fixture();
  const auto common = synthesize_reliable_gcc(demo.system, demo.cost, demo.failures, options);
  CHECK(common.subsystems[0].status == SdpStatus::Infeasible);
  CHECK(common.subsystems[1].ok());
  CHECK(synthesize_reliable_gcc(demo.system, demo.cost, demo.failures).feasible());
}

TEST_CASE("recover_gain rejects singular V") {
  CHECK_THROWS_AS(recover_gain(scalar(1), scalar(0)), NumericalError);
  CHECK(recover_gain(scalar(2), scalar(4))(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("cost bound: x0 = 0, single vertex, and grid oracle") {
  std::mt19937_64 rng(29);
  const auto r1 = result_with({{random_spd(rng, 2)}, {random_spd(rng, 1)}});
  const auto b1 = cost_bound_for_initial_state(r1, VectorXd::Ones(3));
  CHECK(b1.per_vertex.size() == 1);
  CHECK(b1.per_vertex[0] == b1.worst_case);
  CHECK(cost_bound_for_initial_state(r1, VectorXd::Zero(3)).worst_case == 0.0);
  CHECK_THROWS(cost_bound_for_initial_state(r1, VectorXd::Ones(4)));

  for (int trial = 0; trial < 20; ++trial) {
    const Index L = 2 + trial % 2;
    std::vector<std::vector<MatrixXd>> X(2);
    for (auto& xi : X)
      for (Index k = 0; k < L; ++k) xi.push_back(random_spd(rng, 2, 0.1));
    const auto r = result_with(X);
    VectorXd x0 = VectorXd::NullaryExpr(4, [&](Index) { return std::normal_distribution<double>()(rng); });
    const auto bound = cost_bound_for_initial_state(r, x0);
    // Oracle: brute-force maximum over a dense simplex grid.
    double best = -1e300;
    const int steps = 60;
    for (int a = 0; a <= steps; ++a)
      for (int b = 0; b <= (L == 3 ? steps - a : 0); ++b) {
        VectorXd w(L);
        if (L == 2)
          w << double(a) / steps, 1 - double(a) / steps;
        else
          w << double(a) / steps, double(b) / steps, 1 - double(a + b) / steps;
        if ((w.array() < 0).any()) continue;
        double v = 0;
        for (Index i = 0; i < 2; ++i) {
          MatrixXd xa = MatrixXd::Zero(2, 2);
          for (Index k = 0; k < L; ++k) xa += w(k) * X[i][k];
          v += x0.segment(2 * i, 2).dot(xa * x0.segment(2 * i, 2));
        }
        best = std::max(best, v);
      }
    CHECK(bound.worst_case == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("expected cost bound examples") {
  const MatrixXd I2 = MatrixXd::Identity(2, 2);
  CHECK(expected_cost_bound(result_with({{I2}, {I2}})) == 4.0);
  // Sum of traces {3, 5} over two vertices.
  const auto r = result_with({{scalar(1), scalar(2)}, {scalar(2), scalar(3)}});
  CHECK(expected_cost_bound(r) == 5.0);
  std::mt19937_64 rng(31);
  for (int s = 0; s < 200; ++s) {
    const auto alpha = random_simplex_point(rng, 2);
    double total = 0;
    for (const auto& sub : r.subsystems) total += lyapunov_matrix(sub, alpha).trace();
    CHECK(total <= 5.0 + 1e-12);
  }
}

TEST_CASE("certified Lyapunov matrix never exceeds the affine one") {
  std::mt19937_64 rng(37);
  const auto r = result_with({{random_spd(rng, 3), random_spd(rng, 3), random_spd(rng, 3)}});
  for (Index k = 0; k < 3; ++k)
    CHECK((certified_lyapunov_matrix(r.subsystems[0], SimplexPointd::vertex(3, k)) - r.subsystems[0].X[k]).norm() <
          1e-10);
  for (int s = 0; s < 100; ++s) {
    const auto alpha = random_simplex_point(rng, 3);
    CHECK(min_eig(lyapunov_matrix(r.subsystems[0], alpha) - certified_lyapunov_matrix(r.subsystems[0], alpha)) >=
          -1e-10);
  }
}

TEST_CASE("per-vertex bound averaged over unit-covariance x0 stays below J-bar") {
  const auto demo = demo_fixture();
  const auto result = synthesize_reliable_gcc(demo.system, demo.cost, demo.failures);
  REQUIRE(result.feasible());
  const double jbar = expected_cost_bound(result);
  std::mt19937_64 rng(47);
  std::normal_distribution<double> normal;
  const int samples = 20000;
  std::vector<double> mean(2, 0.0);
  for (int s = 0; s < samples; ++s) {
    const VectorXd x0 = VectorXd::NullaryExpr(2, [&](Index) { return normal(rng); });
    const auto b = cost_bound_for_initial_state(result, x0);
    for (std::size_t k = 0; k < 2; ++k) mean[k] += b.per_vertex[k] / samples;
  }
  // Each vertex mean estimates sum_i tr(X_ik); the standard error is about 1.5 % here.
  for (double m : mean) CHECK(m <= jbar * 1.05);
}

TEST_CASE("mode strings round trip") {
  CHECK(synthesis_mode_from_string(to_string(SynthesisMode::Stability)) == SynthesisMode::Stability);
  CHECK(synthesis_mode_from_string(to_string(SynthesisMode::ReliableGcc)) == SynthesisMode::ReliableGcc);
  CHECK_THROWS(synthesis_mode_from_string("other"));
}

}  // TEST_SUITE
