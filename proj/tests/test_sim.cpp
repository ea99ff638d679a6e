#include "helpers.hpp"

#include "rdgcc/fixtures.hpp"
#include "rdgcc/sim.hpp"
#include "rdgcc/synthesis.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace rdgcc;
using namespace testing;

namespace {

/// One scalar subsystem x' = a x + b u with no links; not a valid synthesis input but fine to simulate.
InterconnectedSystemd single(double a, double b) {
  InterconnectedSystemd sys;
  PolytopicSubsystemd s;
  s.state_dim = s.input_dim = s.coupling_dim = 1;
  s.vertex_A = {scalar(a)};
  s.vertex_B = {scalar(b)};
  sys.subsystems.push_back(s);
  return sys;
}

const SynthesisResult& demo_result() {
  static const SynthesisResult result = [] {
    const auto demo = demo_fixture();
    return synthesize_reliable_gcc(demo.system, demo.cost, demo.failures);
  }();
  return result;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("equilibrium stays at zero with zero cost") {
  const auto demo = demo_fixture();
  const auto& result = demo_result();
  const auto loop = make_closed_loop(demo.system, result.gains(), SimplexPointd::barycenter(2), &demo.failures,
                                     &demo.cost, &result);
  SimulationOptions options;
  options.horizon = 2;
  const auto tr = simulate(loop, InterconnectionRealization::worst_case(), FailureRealization::adversarial(),
                           VectorXd::Zero(2), options);
  for (const auto& x : tr.state) CHECK(x.norm() == 0.0);
  CHECK(tr.final_cost == 0.0);
  const auto descent = lyapunov_descent_check(tr, result);
  CHECK(descent.pass);
  CHECK(descent.checked_samples == 0);
}

TEST_CASE("x' = -x, Q = 1: cost 0.5 within 1e-4") {
  const auto sys = single(-1, 1);
  const CostSpecd cost{{scalar(1)}, {scalar(0.5)}};
  const auto loop = make_closed_loop(sys, {scalar(0)}, SimplexPointd::vertex(1, 0), nullptr, &cost);
  const auto tr = simulate(loop, InterconnectionRealization::zero(), FailureRealization::none(), VectorXd::Ones(1));
  CHECK(std::abs(tr.final_cost - 0.5) < 1e-4);
  CHECK(std::abs(tr.state.back()(0) - std::exp(-20.0)) < 1e-12);
  CHECK(tr.applied_equals_control);
}

TEST_CASE("RK4 error ratio near 16 when halving h") {
  // x' = A x with a rotation-damped A; exact solution from the eigen-decomposition.
  InterconnectedSystemd sys;
  PolytopicSubsystemd s;
  s.state_dim = 2;
  s.input_dim = s.coupling_dim = 1;
  const MatrixXd A = (MatrixXd(2, 2) << -0.5, 2, -2, -0.5).finished();
  s.vertex_A = {A};
  s.vertex_B = {MatrixXd::Zero(2, 1)};
  sys.subsystems.push_back(s);
  const auto loop = make_closed_loop(sys, {MatrixXd::Zero(1, 2)}, SimplexPointd::vertex(1, 0));
  const VectorXd x0 = (VectorXd(2) << 1, 0).finished();
  const double T = 2.0;
  // exp(A T) for A = -0.5 I + 2 J: e^{-0.5T} [[cos 2T, sin 2T], [-sin 2T, cos 2T]].
  const VectorXd exact = std::exp(-0.5 * T) * (VectorXd(2) << std::cos(2 * T), -std::sin(2 * T)).finished();
  std::vector<double> errors;
  for (double h : {0.1, 0.05, 0.025}) {
    SimulationOptions options;
    options.horizon = T;
    options.step = h;
    const auto tr = simulate(loop, InterconnectionRealization::zero(), FailureRealization::none(), x0, options);
    errors.push_back((tr.state.back() - exact).norm());
  }
  for (std::size_t k = 1; k < errors.size(); ++k) {
    const double ratio = errors[k - 1] / errors[k];
    CHECK(ratio >= 12);
    CHECK(ratio <= 20);
  }
}

TEST_CASE("nominal failure model applies u exactly") {
  const auto demo = demo_fixture();
  const auto& result = demo_result();
  const auto loop = make_closed_loop(demo.system, result.gains(), SimplexPointd::vertex(2, 0), nullptr, &demo.cost);
  SimulationOptions options;
  options.horizon = 3;
  const auto tr = simulate(loop, InterconnectionRealization::zero(), FailureRealization::none(), VectorXd::Ones(2),
                           options);
  CHECK(tr.applied_equals_control);
  for (std::size_t k = 0; k < tr.control.size(); ++k) CHECK(tr.control[k] == tr.applied[k]);
}

TEST_CASE("decoupled single-vertex run matches the quadrature oracle and stays below the bound") {
  const auto demo = demo_fixture();
  const auto& result = demo_result();
  const auto alpha = SimplexPointd::vertex(2, 1);
  const auto loop = make_closed_loop(demo.system, result.gains(), alpha, nullptr, &demo.cost, &result);
  const VectorXd x0 = (VectorXd(2) << 1.0, -0.7).finished();
  const auto tr = simulate(loop, InterconnectionRealization::zero(), FailureRealization::none(), x0);
  // Oracle: scalar closed loop a_cl = a + b k gives J = x0^2 (q + r k^2) / (-2 a_cl).
  double oracle = 0;
  for (Index i = 0; i < 2; ++i) {
    const double k = result.subsystems[i].K(0, 0);
    const double a = demo.system.subsystems[i].vertex_A[1](0, 0) + k;
    oracle += x0(i) * x0(i) * (0.5 + 0.5 * k * k) / (-2 * a);
  }
  CHECK(tr.final_cost == doctest::Approx(oracle).epsilon(1e-6));
  double bound = 0;
  for (Index i = 0; i < 2; ++i) bound += x0(i) * x0(i) * result.subsystems[i].X[1](0, 0);
  CHECK(tr.final_cost + tr.lyapunov.back() < bound);
}

TEST_CASE("realization families respect their envelopes") {
  const auto demo = demo_fixture();
  const auto& result = demo_result();
  std::mt19937_64 rng(61);
  SimulationOptions options;
  options.horizon = 5;
  options.step = 2e-3;
  for (int trial = 0; trial < 4; ++trial) {
    const auto loop = make_closed_loop(demo.system, result.gains(), random_simplex_point(rng, 2), &demo.failures,
                                       &demo.cost, &result);
    const std::vector<InterconnectionRealization> links{
        InterconnectionRealization::zero(), InterconnectionRealization::constant(loop, rng),
        InterconnectionRealization::sinusoidal(loop, rng), InterconnectionRealization::worst_case()};
    const std::vector<FailureRealization> failures{
        FailureRealization::none(), FailureRealization::outage(),
        FailureRealization::random_switching(loop, rng, options.horizon, 0.5), FailureRealization::adversarial()};
    for (const auto& g : links)
      for (const auto& f : failures) {
        const auto tr = simulate(loop, g, f, VectorXd::Constant(2, 1.0), options);
        CHECK(tr.interconnection_violations == 0);
        CHECK(tr.failure_violations == 0);
        CHECK(tr.negative_integrand == 0);
        CHECK_FALSE(tr.diverged);
      }
  }
}

TEST_CASE("outage zeroes the admissible actuator") {
  const auto demo = demo_fixture();
  const auto& result = demo_result();
  const auto loop = make_closed_loop(demo.system, result.gains(), SimplexPointd::vertex(2, 0), &demo.failures,
                                     &demo.cost, &result);
  SimulationOptions options;
  options.horizon = 1;
  const auto tr = simulate(loop, InterconnectionRealization::zero(), FailureRealization::outage(), VectorXd::Ones(2),
                           options);
  for (const auto& uf : tr.applied) CHECK(uf(0) == 0.0);
  // Subsystem 1 keeps lambda - gamma = 0.5 of its command.
  CHECK(tr.applied[5](1) == doctest::Approx(0.5 * tr.control[5](1)));
}

TEST_CASE("descent check: certified gains pass, tenfold gains fail on an adversarial run") {
  const auto demo = demo_fixture();
  const auto& result = demo_result();
  SimulationOptions options;
  options.horizon = 5;
  const auto alpha = SimplexPointd::barycenter(2);
  const auto good = make_closed_loop(demo.system, result.gains(), alpha, &demo.failures, &demo.cost, &result);
  const auto tr = simulate(good, InterconnectionRealization::worst_case(), FailureRealization::adversarial(),
                           VectorXd::Constant(2, 1.0), options);
  const auto pass = lyapunov_descent_check(tr, result);
  CHECK(pass.pass);
  CHECK(pass.checked_samples > 1000);

  auto tampered = result;
  for (auto& sub : tampered.subsystems) sub.K *= 10;
  const auto bad =
      make_closed_loop(demo.system, tampered.gains(), alpha, &demo.failures, &demo.cost, &tampered);
  const auto tr_bad = simulate(bad, InterconnectionRealization::worst_case(), FailureRealization::adversarial(),
                               VectorXd::Constant(2, 1.0), options);
  const auto fail = lyapunov_descent_check(tr_bad, tampered);
  CHECK_FALSE(fail.pass);
  CHECK(fail.failing_samples > 0);
}

TEST_CASE("divergence is flagged with a partial trajectory") {
  const auto sys = single(3, 1);
  const auto loop = make_closed_loop(sys, {scalar(0)}, SimplexPointd::vertex(1, 0));
  SimulationOptions options;
  options.horizon = 20;
  options.step = 1e-2;
  const auto tr = simulate(loop, InterconnectionRealization::zero(), FailureRealization::none(), VectorXd::Ones(1),
                           options);
  CHECK(tr.diverged);
  CHECK(tr.time.back() < 20);
}

TEST_CASE("Monte Carlo: small certified run, serial and threaded agree") {
  const auto demo = demo_fixture();
  const auto& result = demo_result();
  MonteCarloConfig config;
  config.samples = 24;
  config.horizon = 10;
  config.step = 2e-3;
  config.seed = 5;
  const auto serial = monte_carlo_cost(result, demo.system, demo.cost, demo.failures, config);
  config.threads = 4;
  const auto threaded = monte_carlo_cost(result, demo.system, demo.cost, demo.failures, config);
  CHECK(serial.violations.empty());
  CHECK(serial.invariant_violations == 0);
  REQUIRE(serial.samples.size() == threaded.samples.size());
  for (std::size_t s = 0; s < serial.samples.size(); ++s) {
    CHECK(serial.samples[s].surrogate == threaded.samples[s].surrogate);
    CHECK(serial.samples[s].x0 == threaded.samples[s].x0);
  }
  // Vertices come first and every family appears.
  CHECK(serial.samples[0].alpha.weights() == SimplexPointd::vertex(2, 0).weights());
  CHECK(serial.samples[1].alpha.weights() == SimplexPointd::vertex(2, 1).weights());
  std::set<int> families;
  for (const auto& s : serial.samples) families.insert(4 * int(s.interconnection) + int(s.failure));
  CHECK(families.size() == 16);
}

TEST_CASE("Monte Carlo: tenfold gains violate the bound") {
  const auto demo = demo_fixture();
  auto tampered = demo_result();
  for (auto& sub : tampered.subsystems) sub.K *= 10;
  MonteCarloConfig config;
  config.samples = 16;
  config.horizon = 10;
  config.step = 2e-3;
  config.failures = {FailureFamily::Adversarial};
  config.interconnections = {InterconnectionFamily::WorstCase};
  const auto mc = monte_carlo_cost(tampered, demo.system, demo.cost, demo.failures, config);
  CHECK_FALSE(mc.violations.empty());
}

TEST_CASE("trajectory CSV header") {
  const auto sys = single(-1, 1);
  const auto loop = make_closed_loop(sys, {scalar(0)}, SimplexPointd::vertex(1, 0));
  SimulationOptions options;
  options.horizon = 0.01;
  const auto csv = trajectory_csv(
      simulate(loop, InterconnectionRealization::zero(), FailureRealization::none(), VectorXd::Ones(1), options));
  CHECK(csv.rfind("t,x0,u0,uF0,cost", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);
}

}  // TEST_SUITE
