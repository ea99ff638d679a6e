#include "rdgcc/fixtures.hpp"

#include <algorithm>

namespace rdgcc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }

// Shifts a square matrix so its spectral abscissa is at most -margin.
MatrixXd make_hurwitz(MatrixXd a, double margin) {
  const double shift = spectral_abscissa(a) + margin;
  if (shift > 0) a.diagonal().array() -= shift;
  return a;
}

SystemSpec random_links(std::mt19937_64& rng, SystemSpec spec, double gain_scale, double bound_scale) {
  const Index N = spec.system.size();
  // l_i >= n_j for every sender keeps each W_j full rank.
  for (Index i = 0; i < N; ++i) {
    Index l = 1;
    for (Index j = 0; j < N; ++j)
      if (j != i) l = std::max(l, spec.system.subsystems[j].state_dim);
    spec.system.subsystems[i].coupling_dim = l;
  }
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j) {
      if (i == j) continue;
      const auto& to = spec.system.subsystems[i];
      const auto& from = spec.system.subsystems[j];
      // W_ij is l_i x n_j; pad with a scaled identity so every W_j stays positive definite.
      MatrixXd w = bound_scale * (0.3 * random_matrix(rng, to.coupling_dim, from.state_dim));
      w.topLeftCorner(std::min(to.coupling_dim, from.state_dim), std::min(to.coupling_dim, from.state_dim))
          .diagonal()
          .array() += bound_scale;
      spec.system.links[{i, j}] = {gain_scale * random_matrix(rng, to.state_dim, to.coupling_dim), w};
    }
  return spec;
}

}  // namespace

MatrixXd random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
  return m;
}

SimplexPointd random_simplex_point(std::mt19937_64& rng, Index count) {
  std::exponential_distribution<double> expo(1.0);
  VectorXd w(count);
  for (Index k = 0; k < count; ++k) w(k) = expo(rng);
  return SimplexPointd::normalized(w);
}

SystemSpec demo_fixture() {
  SystemSpec spec;
  for (int i = 0; i < 2; ++i) {
    PolytopicSubsystemd sub;
    sub.state_dim = sub.input_dim = sub.coupling_dim = 1;
    sub.vertex_A = {scalar(-1.0), scalar(-2.0)};
    sub.vertex_B = {scalar(1.0), scalar(1.0)};
    spec.system.subsystems.push_back(sub);
  }
  spec.system.links[{0, 1}] = {scalar(0.1), scalar(0.5)};
  spec.system.links[{1, 0}] = {scalar(0.1), scalar(0.5)};
  spec.cost.Q = {scalar(0.5), scalar(0.5)};
  spec.cost.R = {scalar(0.5), scalar(0.5)};
  spec.has_cost = true;
  spec.failures.lambda = {VectorXd::Constant(1, 1.0), VectorXd::Constant(1, 0.8)};
  spec.failures.gamma = {VectorXd::Constant(1, 1.0), VectorXd::Constant(1, 0.3)};
  return spec;
}

SystemSpec random_actuated_fixture(std::mt19937_64& rng, Index subsystems, Index max_state_dim, Index vertices) {
  std::uniform_int_distribution<Index> dim(1, max_state_dim);
  SystemSpec spec;
  for (Index i = 0; i < subsystems; ++i) {
    PolytopicSubsystemd sub;
    sub.state_dim = dim(rng);
    sub.input_dim = sub.state_dim;
    const MatrixXd a0 = random_matrix(rng, sub.state_dim, sub.state_dim);
    for (Index k = 0; k < vertices; ++k) {
      sub.vertex_A.push_back(a0 + 0.3 * random_matrix(rng, sub.state_dim, sub.state_dim));
      sub.vertex_B.push_back(MatrixXd::Identity(sub.state_dim, sub.state_dim) +
                             0.1 * random_matrix(rng, sub.state_dim, sub.state_dim));
    }
    spec.system.subsystems.push_back(std::move(sub));
  }
  spec = random_links(rng, std::move(spec), 0.2, 0.5);
  for (const auto& sub : spec.system.subsystems) {
    spec.cost.Q.push_back(MatrixXd::Identity(sub.state_dim, sub.state_dim));
    spec.cost.R.push_back(0.5 * MatrixXd::Identity(sub.input_dim, sub.input_dim));
  }
  spec.failures = FailureModeld::nominal(spec.system);
  spec.has_cost = true;
  return spec;
}

SystemSpec random_reliable_fixture(std::mt19937_64& rng, Index subsystems, Index max_state_dim, Index vertices) {
  std::uniform_int_distribution<Index> dim(1, max_state_dim);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SystemSpec spec;
  for (Index i = 0; i < subsystems; ++i) {
    PolytopicSubsystemd sub;
    sub.state_dim = dim(rng);
    sub.input_dim = std::uniform_int_distribution<Index>(1, sub.state_dim)(rng);
    const MatrixXd a0 = 0.5 * random_matrix(rng, sub.state_dim, sub.state_dim);
    const MatrixXd b0 = 0.5 * random_matrix(rng, sub.state_dim, sub.input_dim);
    for (Index k = 0; k < vertices; ++k) {
      sub.vertex_A.push_back(make_hurwitz(a0 + 0.2 * random_matrix(rng, sub.state_dim, sub.state_dim), 1.5));
      sub.vertex_B.push_back(b0 + 0.05 * random_matrix(rng, sub.state_dim, sub.input_dim));
    }
    spec.system.subsystems.push_back(std::move(sub));
  }
  spec = random_links(rng, std::move(spec), 0.1, 0.3);
  for (const auto& sub : spec.system.subsystems) {
    spec.cost.Q.push_back(0.1 * MatrixXd::Identity(sub.state_dim, sub.state_dim));
    spec.cost.R.push_back((0.2 + 0.4 * unit(rng)) * MatrixXd::Identity(sub.input_dim, sub.input_dim));
    VectorXd lambda(sub.input_dim), gamma(sub.input_dim);
    for (Index j = 0; j < sub.input_dim; ++j) {
      lambda(j) = 0.6 + 0.4 * unit(rng);
      gamma(j) = 0.3 * unit(rng) * lambda(j);
    }
    spec.failures.lambda.push_back(lambda);
    spec.failures.gamma.push_back(gamma);
  }
  spec.failures.gamma[0](0) = spec.failures.lambda[0](0);
  spec.has_cost = true;
  return spec;
}

}  // namespace rdgcc
