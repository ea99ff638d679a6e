#pragma once

#include "rdgcc/model.hpp"

#include <cstdint>
#include <random>

namespace rdgcc {

/// Plant, cost and failure envelope read from one system document.
struct SystemSpec {
  InterconnectedSystemd system;
  CostSpecd cost;
  FailureModeld failures;
  bool has_cost = false;
};

/// Two scalar subsystems, A vertices {-1, -2}, B = 1, G_ij = 0.1, W_ij = 0.5, Q = R = 0.5.
/// Subsystem 0 admits full outage (lambda = gamma = 1); subsystem 1 has lambda = 0.8, gamma = 0.3.
SystemSpec demo_fixture();

/// Random interconnected system with s_i = n_i and B vertices near the identity, so that
/// state feedback can stabilise every vertex.
SystemSpec random_actuated_fixture(std::mt19937_64& rng, Eigen::Index subsystems, Eigen::Index max_state_dim,
                                   Eigen::Index vertices);

/// Open-loop stable random system with a reliable cost and a failure envelope that admits outage
/// of the first actuator of subsystem 0.
SystemSpec random_reliable_fixture(std::mt19937_64& rng, Eigen::Index subsystems, Eigen::Index max_state_dim,
                                   Eigen::Index vertices);

/// Standard normal matrix.
Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols);

/// Uniform point of the simplex (flat Dirichlet).
SimplexPointd random_simplex_point(std::mt19937_64& rng, Eigen::Index count);

}  // namespace rdgcc
