#pragma once

#include "rdgcc/model.hpp"

#include <Eigen/Dense>

#include <random>

namespace testing {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }

inline MatrixXd random_symmetric(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> normal;
  MatrixXd m(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) m(r, c) = normal(rng);
  return 0.5 * (m + m.transpose());
}

inline MatrixXd random_spd(std::mt19937_64& rng, Index n, double shift = 0.5) {
  std::normal_distribution<double> normal;
  MatrixXd m(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) m(r, c) = normal(rng);
  return m * m.transpose() + shift * MatrixXd::Identity(n, n);
}

inline double max_eig(const MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

inline double min_eig(const MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

/// Two scalar subsystems with A in {a0, a1}, B = 1 and symmetric links (g, w).
inline rdgcc::InterconnectedSystemd scalar_pair(double a0, double a1, double b, double g, double w) {
  rdgcc::InterconnectedSystemd sys;
  for (int i = 0; i < 2; ++i) {
    rdgcc::PolytopicSubsystemd s;
    s.state_dim = s.input_dim = s.coupling_dim = 1;
    s.vertex_A = {scalar(a0), scalar(a1)};
    s.vertex_B = {scalar(b), scalar(b)};
    sys.subsystems.push_back(s);
  }
  sys.links[{0, 1}] = {scalar(g), scalar(w)};
  sys.links[{1, 0}] = {scalar(g), scalar(w)};
  return sys;
}

inline rdgcc::CostSpecd scalar_cost(double q, double r) {
  return {{scalar(q), scalar(q)}, {scalar(r), scalar(r)}};
}

}  // namespace testing
