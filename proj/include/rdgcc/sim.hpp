#pragma once

#include "rdgcc/model.hpp"
#include "rdgcc/synthesis.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace rdgcc {

/// Subsystem data frozen at one parameter value, plus the gains and optional weights.
struct ClosedLoop {
  std::vector<Eigen::MatrixXd> A, B, K;
  std::vector<Eigen::MatrixXd> Q, R;  // empty: no cost accumulated
  std::vector<Eigen::MatrixXd> X;     // empty: V not recorded
  std::vector<Eigen::VectorXd> lambda, gamma;
  std::map<std::pair<Eigen::Index, Eigen::Index>, Linkd> links;  // (to i, from j)
  std::vector<Eigen::Index> offsets;                              // stacked state offsets, size N + 1
  SimplexPointd alpha = SimplexPointd::vertex(1, 0);

  Eigen::Index size() const { return static_cast<Eigen::Index>(A.size()); }
  Eigen::Index state_size() const { return offsets.back(); }
};

/// Failures default to nominal and X to the certified (sum alpha Y)^{-1} of `result` when given.
ClosedLoop make_closed_loop(const InterconnectedSystemd& system, const std::vector<Eigen::MatrixXd>& gains,
                            const SimplexPointd& alpha, const FailureModeld* failures = nullptr,
                            const CostSpecd* cost = nullptr, const SynthesisResult* result = nullptr);

enum class InterconnectionFamily { Zero, ConstantContraction, Sinusoidal, WorstCase };
enum class FailureFamily { None, Outage, RandomSwitching, Adversarial };

std::string to_string(InterconnectionFamily family);
std::string to_string(FailureFamily family);

/// g_ij(t, x_j) = D_ij(t) W_ij x_j with ||D_ij(t)|| <= 1.
class InterconnectionRealization {
 public:
  InterconnectionRealization() = default;
  static InterconnectionRealization zero();
  static InterconnectionRealization constant(const ClosedLoop& loop, std::mt19937_64& rng);
  static InterconnectionRealization sinusoidal(const ClosedLoop& loop, std::mt19937_64& rng);
  /// Rank-one contraction aligned with X_i G_ij at every instant; needs loop.X.
  static InterconnectionRealization worst_case();

  InterconnectionFamily family() const { return family_; }
  /// Writes g_ij into `out` (length l_i).
  void evaluate(const ClosedLoop& loop, Eigen::Index i, Eigen::Index j, double t, const Eigen::VectorXd& x,
                Eigen::VectorXd& out) const;

 private:
  InterconnectionFamily family_ = InterconnectionFamily::Zero;
  std::map<std::pair<Eigen::Index, Eigen::Index>, Eigen::MatrixXd> contraction_;
  std::map<std::pair<Eigen::Index, Eigen::Index>, std::pair<double, double>> wave_;  // (omega, phase)
};

/// phi_ij(u) = delta_ij(t) gamma_ij u with delta_ij(t) in [-1, 1].
class FailureRealization {
 public:
  FailureRealization() = default;
  static FailureRealization none();
  /// delta = -lambda / gamma where outage is admissible, -1 elsewhere.
  static FailureRealization outage();
  static FailureRealization random_switching(const ClosedLoop& loop, std::mt19937_64& rng, double horizon,
                                             double dwell);
  /// delta_ij = sign((B_i^T X_i x_i)_j u_j); needs loop.X.
  static FailureRealization adversarial();

  FailureFamily family() const { return family_; }
  /// delta_ij at time t.
  double delta(const ClosedLoop& loop, Eigen::Index i, Eigen::Index j, double t, const Eigen::VectorXd& xi,
               double u) const;

 private:
  FailureFamily family_ = FailureFamily::None;
  double dwell_ = 1.0;
  std::vector<std::vector<std::vector<double>>> schedule_;  // [i][j][interval]
};

struct SimulationOptions {
  double horizon = 20.0;
  double step = 1e-3;
  /// Keep every stride-th sample; 0 keeps only the first and last.
  int record_stride = 1;
  double divergence_threshold = 1e12;
};

struct Trajectory {
  std::vector<double> time;
  std::vector<Eigen::VectorXd> state;    // stacked x
  std::vector<Eigen::VectorXd> control;  // stacked u
  std::vector<Eigen::VectorXd> applied;  // stacked u^F
  std::vector<double> cost;              // running integral
  std::vector<double> integrand;         // x^T Q x + u^F^T R u^F
  std::vector<double> lyapunov;          // V(x, alpha); empty without X
  SimplexPointd alpha = SimplexPointd::vertex(1, 0);
  double step = 0.0;
  double final_cost = 0.0;
  bool diverged = false;
  std::size_t interconnection_violations = 0;
  std::size_t failure_violations = 0;
  std::size_t negative_integrand = 0;
  /// Every evaluated u^F equalled u bit for bit.
  bool applied_equals_control = true;
  std::string diagnostics;
};

Trajectory simulate(const ClosedLoop& loop, const InterconnectionRealization& interconnection,
                    const FailureRealization& failure, const Eigen::VectorXd& x0, const SimulationOptions& options = {});

struct MonteCarloConfig {
  int samples = 500;
  double horizon = 20.0;
  double step = 1e-3;
  std::uint64_t seed = 0;
  enum class InitialState { StandardNormal, UnitSphere } x0_distribution = InitialState::StandardNormal;
  double dwell = 0.5;
  /// Restrict sampling to these families; empty means cycle through all of them.
  std::vector<InterconnectionFamily> interconnections;
  std::vector<FailureFamily> failures;
  int threads = 1;
};

struct MonteCarloSample {
  int index = 0;
  SimplexPointd alpha = SimplexPointd::vertex(1, 0);
  InterconnectionFamily interconnection = InterconnectionFamily::Zero;
  FailureFamily failure = FailureFamily::None;
  Eigen::VectorXd x0;
  double cost = 0.0;
  double terminal_lyapunov = 0.0;
  double initial_lyapunov = 0.0;
  double surrogate = 0.0;  // cost + terminal V
  double bound = 0.0;      // worst-case vertex bound for x0
  bool violation = false;
  bool tail_flag = false;  // V(x(T)) > 1% of V(x(0))
  bool diverged = false;
  std::size_t invariant_violations = 0;
};

struct MonteCarloSummary {
  std::vector<MonteCarloSample> samples;
  std::vector<int> violations;
  std::vector<int> tail_flags;
  double max_cost = 0.0;
  double max_ratio = 0.0;  // max surrogate / bound over samples with a positive bound
  std::size_t invariant_violations = 0;
};

/// Reliable-mode results only.
MonteCarloSummary monte_carlo_cost(const SynthesisResult& result, const InterconnectedSystemd& system,
                                   const CostSpecd& cost, const FailureModeld& failures,
                                   const MonteCarloConfig& config = {});

struct DescentCheck {
  double max_normalized = -std::numeric_limits<double>::infinity();  // max (dV/dt + integrand) / |x|^2
  std::size_t failing_samples = 0;
  std::size_t checked_samples = 0;
  bool pass = true;
};

/// Central differences of V(x, alpha) with X(alpha) = (sum alpha Y)^{-1}; needs record_stride = 1.
DescentCheck lyapunov_descent_check(const Trajectory& trajectory, const SynthesisResult& result);

/// Time, stacked state, u, u^F, running cost, V as comma-separated text.
std::string trajectory_csv(const Trajectory& trajectory);

}  // namespace rdgcc
