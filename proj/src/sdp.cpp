#include "rdgcc/sdp.hpp"

#include "rdgcc/errors.hpp"
#include "rdgcc/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace rdgcc {

std::string to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::Feasible: return "feasible";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

void SdpProblem::add_variable(const VariableDecl& decl) {
  if (decl.symmetric() && decl.rows != decl.cols)
    throw InputError("symmetric variable '" + decl.id + "' must be square");
  if (const auto* existing = find_variable(decl.id)) {
    if (existing->rows != decl.rows || existing->cols != decl.cols || existing->kind != decl.kind)
      throw InputError("variable '" + decl.id + "' declared twice with different shape or kind");
    return;
  }
  variables.push_back(decl);
}

void SdpProblem::add_constraint(AffineLmi lmi) {
  for (const auto& decl : lmi.variables()) add_variable(decl);
  constraints.push_back(std::move(lmi));
}

const VariableDecl* SdpProblem::find_variable(const std::string& id) const {
  for (const auto& v : variables)
    if (v.id == id) return &v;
  return nullptr;
}

void SdpProblem::check() const {
  for (const auto& lmi : constraints) {
    for (const auto& term : lmi.terms()) {
      const auto* decl = find_variable(term.variable);
      const auto* local = lmi.find_variable(term.variable);
      if (!decl || !local)
        throw InputError("constraint '" + lmi.name() + "' references undeclared variable '" + term.variable + "'");
      if (decl->rows != local->rows || decl->cols != local->cols || decl->kind != local->kind)
        throw InputError("constraint '" + lmi.name() + "' disagrees with declaration of '" + term.variable + "'");
    }
  }
  for (const auto& term : objective) {
    const auto* decl = find_variable(term.variable);
    if (!decl) throw InputError("objective references undeclared variable '" + term.variable + "'");
    if (term.weight.rows() != decl->rows || term.weight.cols() != decl->cols)
      throw InputError("objective weight for '" + term.variable + "' has the wrong shape");
    if (decl->symmetric() && !is_symmetric(term.weight, 1e-12))
      throw InputError("objective weight for symmetric variable '" + term.variable + "' must be symmetric");
  }
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// M(x) = F0 + sum_p x_p F_p, restricted to the scalars that actually appear.
struct CompiledConstraint {
  Index size = 0;
  MatrixXd offset;  // constant + strictness * I
  std::vector<Index> vars;
  std::vector<MatrixXd> coeffs;
  bool with_margin = false;  // phase I: adds -t I
};

struct Compiled {
  Index dim = 0;
  std::vector<Index> var_offset;
  std::vector<CompiledConstraint> constraints;  // caller constraints first, then implicit SPD ones
  VectorXd cost;
  Index degree = 0;
};

Compiled compile(const SdpProblem& problem) {
  Compiled out;
  for (const auto& v : problem.variables) {
    out.var_offset.push_back(out.dim);
    out.dim += v.dof();
  }
  auto var_index = [&](const std::string& id) {
    for (std::size_t k = 0; k < problem.variables.size(); ++k)
      if (problem.variables[k].id == id) return k;
    throw InputError("unknown variable '" + id + "'");
  };

  for (const auto& lmi : problem.constraints) {
    CompiledConstraint cc;
    cc.size = lmi.size();
    cc.offset = lmi.constant() + lmi.strictness() * MatrixXd::Identity(cc.size, cc.size);
    std::vector<std::string> seen;
    for (const auto& term : lmi.terms()) {
      if (std::find(seen.begin(), seen.end(), term.variable) != seen.end()) continue;
      seen.push_back(term.variable);
      const auto k = var_index(term.variable);
      const auto& decl = problem.variables[k];
      for (Index p = 0; p < decl.dof(); ++p) {
        MatrixXd f = lmi.linear_part(term.variable, decl.basis(p));
        if (f.cwiseAbs().maxCoeff() == 0.0) continue;
        cc.vars.push_back(out.var_offset[k] + p);
        cc.coeffs.push_back(std::move(f));
      }
    }
    out.constraints.push_back(std::move(cc));
  }
  for (std::size_t k = 0; k < problem.variables.size(); ++k) {
    const auto& decl = problem.variables[k];
    if (decl.kind != VariableKind::SymmetricPositiveDefinite) continue;
    CompiledConstraint cc;
    cc.size = decl.rows;
    cc.offset = MatrixXd::Zero(cc.size, cc.size);
    for (Index p = 0; p < decl.dof(); ++p) {
      cc.vars.push_back(out.var_offset[k] + p);
      cc.coeffs.push_back(-decl.basis(p));
    }
    out.constraints.push_back(std::move(cc));
  }
  out.cost = VectorXd::Zero(out.dim);
  for (const auto& term : problem.objective) {
    const auto k = var_index(term.variable);
    const auto& decl = problem.variables[k];
    for (Index p = 0; p < decl.dof(); ++p)
      out.cost(out.var_offset[k] + p) += (term.weight.array() * decl.basis(p).array()).sum();
  }
  for (const auto& cc : out.constraints) out.degree += cc.size;
  out.degree += 1;  // variable ball
  return out;
}

// Objective w^T z + quad |x|^2 plus barrier -sum_j log det(level I - M_j(x) (+ t I)) - log(R^2 - |x|^2),
// where z = x, or z = (x, t) in the margin phase.
class Barrier {
 public:
  Barrier(const Compiled& c, bool with_margin, double radius, double level = 0.0)
      : c_(c), with_margin_(with_margin), radius2_(radius * radius), level_(level) {}

  Index dim() const { return c_.dim + (with_margin_ ? 1 : 0); }

  // +inf outside the domain.
  double value(const VectorXd& z, const VectorXd& w, double quad) const {
    const double xx = z.head(c_.dim).squaredNorm();
    const double ball = radius2_ - xx;
    if (!(ball > 0)) return std::numeric_limits<double>::infinity();
    double f = w.dot(z) + quad * xx - std::log(ball);
    for (const auto& cc : c_.constraints) {
      Eigen::LLT<MatrixXd> llt(slack(cc, z));
      if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
      const VectorXd d = llt.matrixLLT().diagonal();
      for (Index a = 0; a < d.size(); ++a) {
        if (!(d(a) > 0)) return std::numeric_limits<double>::infinity();
        f -= 2.0 * std::log(d(a));
      }
    }
    return f;
  }

  // false outside the domain.
  bool derivatives(const VectorXd& z, const VectorXd& w, double quad, VectorXd& grad, MatrixXd& hess) const {
    const Index n = dim();
    grad = w;
    hess = MatrixXd::Zero(n, n);
    const VectorXd x = z.head(c_.dim);
    const double ball = radius2_ - x.squaredNorm();
    if (!(ball > 0)) return false;
    grad.head(c_.dim) += (2.0 / ball + 2.0 * quad) * x;
    hess.topLeftCorner(c_.dim, c_.dim).diagonal().array() += 2.0 / ball + 2.0 * quad;
    hess.topLeftCorner(c_.dim, c_.dim).noalias() += (4.0 / (ball * ball)) * x * x.transpose();

    std::vector<MatrixXd> u;
    std::vector<Index> idx;
    for (const auto& cc : c_.constraints) {
      Eigen::LLT<MatrixXd> llt(slack(cc, z));
      if (llt.info() != Eigen::Success) return false;
      const MatrixXd linv = llt.matrixL().solve(MatrixXd::Identity(cc.size, cc.size));
      u.clear();
      idx.clear();
      for (std::size_t a = 0; a < cc.vars.size(); ++a) {
        u.push_back(linv * cc.coeffs[a] * linv.transpose());
        idx.push_back(cc.vars[a]);
      }
      if (with_margin_) {
        u.push_back(-(linv * linv.transpose()));
        idx.push_back(c_.dim);
      }
      for (std::size_t a = 0; a < u.size(); ++a) {
        grad(idx[a]) += u[a].trace();
        for (std::size_t b = 0; b <= a; ++b) {
          const double h = (u[a].array() * u[b].array()).sum();
          hess(idx[a], idx[b]) += h;
          if (a != b) hess(idx[b], idx[a]) += h;
        }
      }
    }
    return true;
  }

  MatrixXd constraint_matrix(const CompiledConstraint& cc, const VectorXd& z) const {
    MatrixXd m = cc.offset;
    for (std::size_t a = 0; a < cc.vars.size(); ++a) m.noalias() += z(cc.vars[a]) * cc.coeffs[a];
    return m;
  }

 private:
  MatrixXd slack(const CompiledConstraint& cc, const VectorXd& z) const {
    MatrixXd s = -constraint_matrix(cc, z);
    s.diagonal().array() += level_ + (with_margin_ ? z(c_.dim) : 0.0);
    return s;
  }

  const Compiled& c_;
  bool with_margin_;
  double radius2_;
  double level_;
};

enum class CenterOutcome { Converged, Stalled, IterationCap, Breakdown };

// Damped Newton centering; `used` counts Newton steps against `budget` across calls.
CenterOutcome center(const Barrier& barrier, VectorXd& z, const VectorXd& w, double quad, int budget, int& used) {
  VectorXd grad;
  MatrixXd hess;
  double f = barrier.value(z, w, quad);
  for (int inner = 0; inner < 100; ++inner) {
    if (used >= budget) return CenterOutcome::IterationCap;
    if (!barrier.derivatives(z, w, quad, grad, hess)) return CenterOutcome::Breakdown;
    ++used;
    hess.diagonal().array() += 1e-14 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success) return CenterOutcome::Breakdown;
    const VectorXd step = -ldlt.solve(grad);
    if (!step.allFinite()) return CenterOutcome::Breakdown;
    const double decrement = -grad.dot(step);
    if (decrement / 2.0 <= 1e-10) return CenterOutcome::Converged;
    double s = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, s *= 0.5) {
      const VectorXd trial = z + s * step;
      const double ft = barrier.value(trial, w, quad);
      if (std::isfinite(ft) && ft <= f - 0.25 * s * decrement) {
        z = trial;
        f = ft;
        moved = true;
        break;
      }
    }
    if (!moved) return CenterOutcome::Stalled;
  }
  return CenterOutcome::Converged;
}

double max_shifted_eigenvalue(const Barrier& barrier, const Compiled& c, const VectorXd& x) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& cc : c.constraints) worst = std::max(worst, max_eigenvalue(barrier.constraint_matrix(cc, x)));
  return worst;
}

constexpr double kPathFactor = 10.0;
constexpr double kMarginRelativeGap = 1e-3;

// Follows the central path of min w^T x + quad |x|^2 until the relative gap drops below rel_gap.
// Returns false on breakdown or when the iteration budget runs out.
bool follow_path(const Barrier& barrier, VectorXd& x, const VectorXd& cost, bool quadratic, double deg,
                 double rel_gap, int budget, int& used, std::ostringstream& diag, const char* phase) {
  const auto objective = [&](const VectorXd& v) { return quadratic ? v.squaredNorm() : cost.dot(v); };
  double tau = deg / std::max(1.0, std::abs(objective(x)));
  const VectorXd zero = VectorXd::Zero(x.size());
  for (int outer = 0; outer < 200; ++outer) {
    VectorXd candidate = x;
    const auto outcome = quadratic ? center(barrier, candidate, zero, tau, budget, used)
                                   : center(barrier, candidate, (tau * cost).eval(), 0.0, budget, used);
    if (outcome == CenterOutcome::Breakdown) {
      diag << phase << ": numerical breakdown; ";
      return false;
    }
    x = candidate;
    if (outcome == CenterOutcome::IterationCap) {
      diag << phase << ": iteration cap reached before convergence; ";
      return false;
    }
    const double gap = deg / tau;
    if (gap <= rel_gap * std::max(1.0, std::abs(objective(x)))) return true;
    if (outcome == CenterOutcome::Stalled && gap <= 1e-6 * std::max(1.0, std::abs(objective(x)))) return true;
    tau *= kPathFactor;
  }
  return true;
}

}  // namespace

SdpSolution BarrierBackend::solve(const SdpProblem& problem, const SolverOptions& options) const {
  problem.check();
  const Compiled c = compile(problem);
  SdpSolution sol;
  sol.backend = name();
  std::ostringstream diag;
  int used = 0;
  const int budget = options.max_iterations;
  const double deg = static_cast<double>(c.degree);

  // Phase I: minimise t subject to M_j(x) + eps_j I <= t I.
  Barrier phase1(c, true, options.variable_bound);
  VectorXd z = VectorXd::Zero(c.dim + 1);
  {
    double start = -1.0;
    for (const auto& cc : c.constraints) start = std::max(start, max_eigenvalue(cc.offset));
    z(c.dim) = start + std::max(1.0, 0.1 * std::abs(start));
  }
  VectorXd w1 = VectorXd::Zero(c.dim + 1);
  double tau = 1.0;
  bool converged = false;
  for (int outer = 0; outer < 200; ++outer) {
    w1(c.dim) = tau;
    const auto outcome = center(phase1, z, w1, 0.0, budget, used);
    if (outcome == CenterOutcome::Breakdown) {
      diag << "phase I numerical breakdown at tau=" << tau << "; ";
      break;
    }
    if (outcome == CenterOutcome::IterationCap) {
      diag << "iteration cap reached in phase I; ";
      break;
    }
    const double t = z(c.dim);
    const double gap = deg / tau;
    if (t - gap > options.tolerance) {
      converged = true;  // lower bound on the optimal margin is positive
      diag << "optimal margin bounded below by " << (t - gap) << " within variable bound "
           << options.variable_bound << "; ";
      break;
    }
    // Near-optimal margin; pushing further only drifts along a flat optimal face.
    const bool near_optimal = t < 0.0 && gap <= kMarginRelativeGap * std::abs(t);
    const bool tight = gap <= options.tolerance * std::max(1.0, std::abs(t));
    const bool stalled = outcome == CenterOutcome::Stalled && gap <= 1e-6 * std::max(1.0, std::abs(t));
    if (near_optimal || tight || stalled) {
      converged = true;
      break;
    }
    tau *= kPathFactor;
  }
  VectorXd x = z.head(c.dim);
  Barrier unshifted(c, false, options.variable_bound);
  sol.margin = max_shifted_eigenvalue(unshifted, c, x);

  auto finish = [&](SdpStatus status, const VectorXd& xv) {
    sol.status = status;
    for (std::size_t k = 0; k < problem.variables.size(); ++k) {
      const auto& decl = problem.variables[k];
      sol.assignment[decl.id] = decl.unvectorize(xv.segment(c.var_offset[k], decl.dof()));
    }
    if (!problem.objective.empty()) sol.objective_value = c.cost.dot(xv);
    sol.iterations = used;
    sol.diagnostics = diag.str();
  };

  if (sol.margin >= 0.0) {
    const bool clearly = converged && sol.margin > options.tolerance;
    if (!clearly) diag << "margin " << sol.margin << " not separated from zero; ";
    finish(clearly ? SdpStatus::Infeasible : SdpStatus::Inconclusive, x);
    return sol;
  }

  if (problem.objective.empty()) {
    // Smallest-norm point that keeps half of the uniform margin found above.
    Barrier regular(c, false, options.variable_bound, 0.5 * sol.margin);
    VectorXd y = x;
    if (std::isfinite(regular.value(y, VectorXd::Zero(c.dim), 0.0)) &&
        follow_path(regular, y, c.cost, true, deg, 1e-3, budget, used, diag, "regularization"))
      x = y;
    else if (std::isfinite(regular.value(y, VectorXd::Zero(c.dim), 0.0)))
      x = y;
  } else {
    VectorXd y = x;
    follow_path(unshifted, y, c.cost, false, deg, options.tolerance, budget, used, diag, "objective phase");
    x = y;
  }
  if (!converged) diag << "feasible point found before the margin search converged; ";
  finish(SdpStatus::Feasible, x);
  return sol;
}

std::unique_ptr<SdpBackend> make_backend(const std::string& name) {
  if (name == "barrier") return std::make_unique<BarrierBackend>();
  throw InputError("unknown SDP backend '" + name + "'");
}

void recompute_residuals(const SdpProblem& problem, SdpSolution& solution) {
  solution.residuals.clear();
  solution.max_residual = -std::numeric_limits<double>::infinity();
  solution.max_violation = -std::numeric_limits<double>::infinity();
  for (const auto& lmi : problem.constraints) {
    const double r = lmi.max_eigenvalue(solution.assignment);
    solution.residuals.push_back(r);
    solution.max_residual = std::max(solution.max_residual, r);
    solution.max_violation = std::max(solution.max_violation, r + lmi.strictness());
  }
}

SdpSolution solve(const SdpProblem& problem, const SolverOptions& options) {
  const auto backend = make_backend(options.backend);
  SdpSolution sol;
  try {
    sol = backend->solve(problem, options);
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    sol.status = SdpStatus::Inconclusive;
    sol.backend = backend->name();
    sol.diagnostics = std::string("backend failure: ") + e.what();
    return sol;
  }
  if (sol.assignment.empty() && !problem.variables.empty()) return sol;
  recompute_residuals(problem, sol);
  if (sol.status == SdpStatus::Feasible) {
    bool ok = sol.max_violation <= options.tolerance;
    for (const auto& decl : problem.variables)
      if (decl.kind == VariableKind::SymmetricPositiveDefinite &&
          !(min_eigenvalue(sol.assignment.at(decl.id)) > 0.0))
        ok = false;
    if (!ok) {
      sol.status = SdpStatus::Inconclusive;
      sol.diagnostics += "recomputed residuals do not confirm feasibility; ";
    }
  }
  return sol;
}

}  // namespace rdgcc
