#include "rdgcc/sim.hpp"

#include "rdgcc/fixtures.hpp"

#include <cmath>
#include <future>
#include <numbers>
#include <sstream>

namespace rdgcc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(InterconnectionFamily family) {
  switch (family) {
    case InterconnectionFamily::Zero: return "zero";
    case InterconnectionFamily::ConstantContraction: return "constant";
    case InterconnectionFamily::Sinusoidal: return "sinusoidal";
    case InterconnectionFamily::WorstCase: return "worst-case";
  }
  return "unknown";
}

std::string to_string(FailureFamily family) {
  switch (family) {
    case FailureFamily::None: return "none";
    case FailureFamily::Outage: return "outage";
    case FailureFamily::RandomSwitching: return "random-switching";
    case FailureFamily::Adversarial: return "adversarial";
  }
  return "unknown";
}

ClosedLoop make_closed_loop(const InterconnectedSystemd& system, const std::vector<MatrixXd>& gains,
                            const SimplexPointd& alpha, const FailureModeld* failures, const CostSpecd* cost,
                            const SynthesisResult* result) {
  if (static_cast<Index>(gains.size()) != system.size())
    throw std::invalid_argument("make_closed_loop: one gain per subsystem required");
  ClosedLoop loop;
  loop.alpha = alpha;
  loop.links = system.links;
  loop.offsets = state_offsets(system);
  for (Index i = 0; i < system.size(); ++i) {
    const auto& sub = system.subsystems[i];
    auto [A, B] = evaluate_at_alpha(sub, alpha);
    if (gains[i].rows() != sub.input_dim || gains[i].cols() != sub.state_dim)
      throw std::invalid_argument("make_closed_loop: gain " + std::to_string(i) + " has the wrong shape");
    loop.A.push_back(std::move(A));
    loop.B.push_back(std::move(B));
    loop.K.push_back(gains[i]);
    loop.lambda.push_back(failures ? failures->lambda[i] : VectorXd::Ones(sub.input_dim));
    loop.gamma.push_back(failures ? failures->gamma[i] : VectorXd::Zero(sub.input_dim));
    if (cost) {
      loop.Q.push_back(cost->Q[i]);
      loop.R.push_back(cost->R[i]);
    }
    if (result && result->feasible()) loop.X.push_back(certified_lyapunov_matrix(result->subsystems[i], alpha));
  }
  return loop;
}

InterconnectionRealization InterconnectionRealization::zero() { return {}; }

InterconnectionRealization InterconnectionRealization::constant(const ClosedLoop& loop, std::mt19937_64& rng) {
  InterconnectionRealization out;
  out.family_ = InterconnectionFamily::ConstantContraction;
  std::uniform_real_distribution<double> scale(0.5, 1.0);
  for (const auto& [key, link] : loop.links) {
    const Index l = link.W.rows();
    MatrixXd d = random_matrix(rng, l, l);
    const double norm = Eigen::JacobiSVD<MatrixXd>(d).singularValues()(0);
    d *= norm > 0 ? scale(rng) / norm : 0.0;
    out.contraction_[key] = d;
  }
  return out;
}

InterconnectionRealization InterconnectionRealization::sinusoidal(const ClosedLoop& loop, std::mt19937_64& rng) {
  InterconnectionRealization out;
  out.family_ = InterconnectionFamily::Sinusoidal;
  std::uniform_real_distribution<double> omega(0.5, 5.0), phase(0.0, 2.0 * std::numbers::pi);
  for (const auto& [key, link] : loop.links) out.wave_[key] = {omega(rng), phase(rng)};
  return out;
}

InterconnectionRealization InterconnectionRealization::worst_case() {
  InterconnectionRealization out;
  out.family_ = InterconnectionFamily::WorstCase;
  return out;
}

void InterconnectionRealization::evaluate(const ClosedLoop& loop, Index i, Index j, double t, const VectorXd& x,
                                          VectorXd& out) const {
  const auto it = loop.links.find({i, j});
  const Index ni = loop.offsets[i + 1] - loop.offsets[i];
  const Index nj = loop.offsets[j + 1] - loop.offsets[j];
  if (it == loop.links.end()) {
    out.setZero();
    return;
  }
  const auto& link = it->second;
  const VectorXd b = link.W * x.segment(loop.offsets[j], nj);
  switch (family_) {
    case InterconnectionFamily::Zero:
      out.setZero(b.size());
      return;
    case InterconnectionFamily::ConstantContraction:
      out.noalias() = contraction_.at({i, j}) * b;
      return;
    case InterconnectionFamily::Sinusoidal: {
      const auto [omega, phase] = wave_.at({i, j});
      out = std::sin(omega * t + phase) * b;
      return;
    }
    case InterconnectionFamily::WorstCase: {
      if (loop.X.empty()) throw std::logic_error("worst-case interconnection needs Lyapunov matrices");
      // D = a b^T / (|a| |b|) maximises x_i^T X_i G_ij D b over contractions.
      const VectorXd a = link.G.transpose() * (loop.X[i] * x.segment(loop.offsets[i], ni));
      const double na = a.norm();
      if (na > 0)
        out = (b.norm() / na) * a;
      else
        out = b;
      return;
    }
  }
}

FailureRealization FailureRealization::none() { return {}; }

FailureRealization FailureRealization::outage() {
  FailureRealization out;
  out.family_ = FailureFamily::Outage;
  return out;
}

FailureRealization FailureRealization::random_switching(const ClosedLoop& loop, std::mt19937_64& rng,
                                                        double horizon, double dwell) {
  if (!(dwell > 0)) throw std::invalid_argument("dwell time must be positive");
  FailureRealization out;
  out.family_ = FailureFamily::RandomSwitching;
  out.dwell_ = dwell;
  const auto intervals = static_cast<std::size_t>(std::ceil(horizon / dwell)) + 1;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 3);
  out.schedule_.resize(loop.size());
  for (Index i = 0; i < loop.size(); ++i) {
    out.schedule_[i].resize(loop.lambda[i].size());
    for (auto& actuator : out.schedule_[i]) {
      actuator.resize(intervals);
      // Half of the intervals sit on an envelope edge.
      for (auto& d : actuator) {
        const int p = pick(rng);
        d = p == 0 ? -1.0 : p == 1 ? 1.0 : unit(rng);
      }
    }
  }
  return out;
}

FailureRealization FailureRealization::adversarial() {
  FailureRealization out;
  out.family_ = FailureFamily::Adversarial;
  return out;
}

double FailureRealization::delta(const ClosedLoop& loop, Index i, Index j, double t, const VectorXd& xi,
                                 double u) const {
  switch (family_) {
    case FailureFamily::None: return 0.0;
    case FailureFamily::Outage: {
      const double lambda = loop.lambda[i](j), gamma = loop.gamma[i](j);
      return gamma >= lambda && gamma > 0 ? -lambda / gamma : -1.0;
    }
    case FailureFamily::RandomSwitching: {
      const auto& s = schedule_[i][j];
      const auto k = std::min(s.size() - 1, static_cast<std::size_t>(std::max(0.0, t) / dwell_));
      return s[k];
    }
    case FailureFamily::Adversarial: {
      if (loop.X.empty()) throw std::logic_error("adversarial failure needs Lyapunov matrices");
      const double drive = (loop.B[i].col(j).transpose() * (loop.X[i] * xi))(0) * u;
      return drive >= 0 ? 1.0 : -1.0;
    }
  }
  return 0.0;
}

namespace {

struct Workspace {
  std::vector<VectorXd> u, uf, g;
  VectorXd xi;
};

// x' = A x + B u^F + sum_j G_ij g_ij; fills ws.u / ws.uf for the caller.
double derivative(const ClosedLoop& loop, const InterconnectionRealization& ic, const FailureRealization& fr,
                  double t, const VectorXd& x, VectorXd& xdot, Workspace& ws, Trajectory& tr) {
  double integrand = 0.0;
  for (Index i = 0; i < loop.size(); ++i) {
    const Index o = loop.offsets[i];
    const Index n = loop.offsets[i + 1] - o;
    ws.xi = x.segment(o, n);
    ws.u[i].noalias() = loop.K[i] * ws.xi;
    for (Index j = 0; j < ws.u[i].size(); ++j) {
      const double u = ws.u[i](j);
      const double phi = fr.delta(loop, i, j, t, ws.xi, u) * loop.gamma[i](j) * u;
      if (std::abs(phi) > loop.gamma[i](j) * std::abs(u) * (1 + 1e-12)) ++tr.failure_violations;
      ws.uf[i](j) = loop.lambda[i](j) * u + phi;
      if (ws.uf[i](j) != u) tr.applied_equals_control = false;
    }
    auto out = xdot.segment(o, n);
    out.noalias() = loop.A[i] * ws.xi;
    out.noalias() += loop.B[i] * ws.uf[i];
    for (Index j = 0; j < loop.size(); ++j) {
      if (j == i) continue;
      const auto it = loop.links.find({i, j});
      if (it == loop.links.end()) continue;
      ic.evaluate(loop, i, j, t, x, ws.g[i]);
      const double bound = (it->second.W * x.segment(loop.offsets[j], loop.offsets[j + 1] - loop.offsets[j])).norm();
      if (ws.g[i].norm() > bound * (1 + 1e-12) + 1e-12) ++tr.interconnection_violations;
      out.noalias() += it->second.G * ws.g[i];
    }
    if (!loop.Q.empty()) {
      const double term = ws.xi.dot(loop.Q[i] * ws.xi) + ws.uf[i].dot(loop.R[i] * ws.uf[i]);
      if (term < 0) ++tr.negative_integrand;
      integrand += term;
    }
  }
  return integrand;
}

double lyapunov_value(const ClosedLoop& loop, const VectorXd& x) {
  double v = 0.0;
  for (Index i = 0; i < loop.size(); ++i) {
    const Index o = loop.offsets[i];
    const Index n = loop.offsets[i + 1] - o;
    v += x.segment(o, n).dot(loop.X[i] * x.segment(o, n));
  }
  return v;
}

VectorXd stack(const std::vector<VectorXd>& parts) {
  Index total = 0;
  for (const auto& p : parts) total += p.size();
  VectorXd out(total);
  Index o = 0;
  for (const auto& p : parts) {
    out.segment(o, p.size()) = p;
    o += p.size();
  }
  return out;
}

}  // namespace

Trajectory simulate(const ClosedLoop& loop, const InterconnectionRealization& ic, const FailureRealization& fr,
                    const VectorXd& x0, const SimulationOptions& options) {
  if (!(options.step > 0) || !(options.horizon >= options.step))
    throw std::invalid_argument("simulate: need h > 0 and T >= h");
  if (x0.size() != loop.state_size()) throw std::invalid_argument("simulate: x0 has the wrong size");
  const double h = options.step;
  const auto steps = static_cast<long>(std::llround(options.horizon / h));

  Trajectory tr;
  tr.alpha = loop.alpha;
  tr.step = h;
  Workspace ws;
  for (Index i = 0; i < loop.size(); ++i) {
    ws.u.push_back(VectorXd::Zero(loop.K[i].rows()));
    ws.uf.push_back(VectorXd::Zero(loop.K[i].rows()));
    ws.g.emplace_back();
  }
  for (const auto& [key, link] : loop.links) ws.g[key.first].resize(link.G.cols());

  const Index dim = x0.size();
  VectorXd x = x0, k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  double running = 0.0;
  auto record = [&](double t, double integrand) {
    tr.time.push_back(t);
    tr.state.push_back(x);
    tr.control.push_back(stack(ws.u));
    tr.applied.push_back(stack(ws.uf));
    tr.cost.push_back(running);
    tr.integrand.push_back(integrand);
    if (!loop.X.empty()) tr.lyapunov.push_back(lyapunov_value(loop, x));
  };
  auto keep = [&](long k) {
    if (k == 0 || k == steps) return true;
    return options.record_stride > 0 && k % options.record_stride == 0;
  };

  double t = 0.0;
  double integrand = derivative(loop, ic, fr, t, x, k1, ws, tr);
  if (keep(0)) record(t, integrand);
  for (long k = 0; k < steps; ++k) {
    tmp = x + 0.5 * h * k1;
    derivative(loop, ic, fr, t + 0.5 * h, tmp, k2, ws, tr);
    tmp = x + 0.5 * h * k2;
    derivative(loop, ic, fr, t + 0.5 * h, tmp, k3, ws, tr);
    tmp = x + h * k3;
    derivative(loop, ic, fr, t + h, tmp, k4, ws, tr);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = static_cast<double>(k + 1) * h;
    const double next = derivative(loop, ic, fr, t, x, k1, ws, tr);
    running += 0.5 * h * (integrand + next);
    integrand = next;
    const double norm = x.norm();
    if (!std::isfinite(norm) || norm > options.divergence_threshold) {
      tr.diverged = true;
      tr.diagnostics = "state norm exceeded " + std::to_string(options.divergence_threshold) + " at t=" +
                       std::to_string(t);
      record(t, integrand);
      break;
    }
    if (keep(k + 1)) record(t, integrand);
  }
  tr.final_cost = running;
  return tr;
}

MonteCarloSummary monte_carlo_cost(const SynthesisResult& result, const InterconnectedSystemd& system,
                                   const CostSpecd& cost, const FailureModeld& failures,
                                   const MonteCarloConfig& config) {
  if (result.mode != SynthesisMode::ReliableGcc || !result.feasible())
    throw std::invalid_argument("monte_carlo_cost needs a feasible reliable-mode result");
  std::vector<InterconnectionFamily> ics = config.interconnections;
  if (ics.empty())
    ics = {InterconnectionFamily::Zero, InterconnectionFamily::ConstantContraction, InterconnectionFamily::Sinusoidal,
           InterconnectionFamily::WorstCase};
  std::vector<FailureFamily> fails = config.failures;
  if (fails.empty())
    fails = {FailureFamily::None, FailureFamily::Outage, FailureFamily::RandomSwitching, FailureFamily::Adversarial};
  const Index L = system.vertex_count();
  const std::vector<MatrixXd> gains = result.gains();
  SimulationOptions sim;
  sim.horizon = config.horizon;
  sim.step = config.step;
  sim.record_stride = 0;

  auto run = [&](int s) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(s)};
    std::mt19937_64 rng(seq);
    MonteCarloSample out;
    out.index = s;
    out.alpha = s < L ? SimplexPointd::vertex(L, s) : random_simplex_point(rng, L);
    out.interconnection = ics[s % ics.size()];
    out.failure = fails[(s / ics.size()) % fails.size()];
    const Index dim = state_offsets(system).back();
    out.x0 = random_matrix(rng, dim, 1);
    if (config.x0_distribution == MonteCarloConfig::InitialState::UnitSphere && out.x0.norm() > 0)
      out.x0.normalize();

    const ClosedLoop loop = make_closed_loop(system, gains, out.alpha, &failures, &cost, &result);
    InterconnectionRealization ic;
    switch (out.interconnection) {
      case InterconnectionFamily::Zero: ic = InterconnectionRealization::zero(); break;
      case InterconnectionFamily::ConstantContraction: ic = InterconnectionRealization::constant(loop, rng); break;
      case InterconnectionFamily::Sinusoidal: ic = InterconnectionRealization::sinusoidal(loop, rng); break;
      case InterconnectionFamily::WorstCase: ic = InterconnectionRealization::worst_case(); break;
    }
    FailureRealization fr;
    switch (out.failure) {
      case FailureFamily::None: fr = FailureRealization::none(); break;
      case FailureFamily::Outage: fr = FailureRealization::outage(); break;
      case FailureFamily::RandomSwitching:
        fr = FailureRealization::random_switching(loop, rng, config.horizon, config.dwell);
        break;
      case FailureFamily::Adversarial: fr = FailureRealization::adversarial(); break;
    }
    const Trajectory tr = simulate(loop, ic, fr, out.x0, sim);

    // Tail surrogate uses the vertex-interpolated X(alpha), which dominates the certified one.
    auto affine_v = [&](const VectorXd& x) {
      double v = 0.0;
      const auto offsets = state_offsets(system);
      for (Index i = 0; i < system.size(); ++i) {
        const Index n = offsets[i + 1] - offsets[i];
        v += x.segment(offsets[i], n).dot(lyapunov_matrix(result.subsystems[i], out.alpha) * x.segment(offsets[i], n));
      }
      return v;
    };
    out.cost = tr.final_cost;
    out.initial_lyapunov = affine_v(out.x0);
    out.terminal_lyapunov = affine_v(tr.state.back());
    out.surrogate = out.cost + out.terminal_lyapunov;
    out.bound = cost_bound_for_initial_state(result, out.x0).worst_case;
    out.diverged = tr.diverged;
    out.invariant_violations = tr.interconnection_violations + tr.failure_violations + tr.negative_integrand;
    out.violation = tr.diverged || !std::isfinite(out.surrogate) || out.surrogate > out.bound * (1 + 1e-9) + 1e-300;
    out.tail_flag = out.terminal_lyapunov > 0.01 * out.initial_lyapunov;
    return out;
  };

  MonteCarloSummary summary;
  summary.samples.resize(config.samples);
  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (int s = 0; s < config.samples; ++s) summary.samples[s] = run(s);
  } else {
    std::vector<std::future<void>> jobs;
    for (int w = 0; w < threads; ++w)
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (int s = w; s < config.samples; s += threads) summary.samples[s] = run(s);
      }));
    for (auto& j : jobs) j.get();
  }
  for (const auto& s : summary.samples) {
    if (s.violation) summary.violations.push_back(s.index);
    if (s.tail_flag) summary.tail_flags.push_back(s.index);
    summary.max_cost = std::max(summary.max_cost, s.cost);
    if (s.bound > 0) summary.max_ratio = std::max(summary.max_ratio, s.surrogate / s.bound);
    summary.invariant_violations += s.invariant_violations;
  }
  return summary;
}

DescentCheck lyapunov_descent_check(const Trajectory& tr, const SynthesisResult& result) {
  if (!result.feasible()) throw std::invalid_argument("lyapunov_descent_check needs a feasible result");
  const Index N = static_cast<Index>(result.subsystems.size());
  std::vector<MatrixXd> X;
  std::vector<Index> offsets{0};
  for (const auto& sub : result.subsystems) {
    X.push_back(certified_lyapunov_matrix(sub, tr.alpha));
    offsets.push_back(offsets.back() + X.back().rows());
  }
  auto value = [&](const VectorXd& x) {
    double v = 0.0;
    for (Index i = 0; i < N; ++i) {
      const Index n = offsets[i + 1] - offsets[i];
      v += x.segment(offsets[i], n).dot(X[i] * x.segment(offsets[i], n));
    }
    return v;
  };
  const bool with_cost = result.mode == SynthesisMode::ReliableGcc;
  const double h = tr.step;
  DescentCheck out;
  for (std::size_t k = 1; k + 1 < tr.state.size(); ++k) {
    const double norm2 = tr.state[k].squaredNorm();
    if (std::sqrt(norm2) <= 1e-8) continue;
    if (std::abs(tr.time[k + 1] - tr.time[k - 1] - 2 * h) > 1e-9 * h)
      throw std::invalid_argument("lyapunov_descent_check needs every integration step recorded");
    const double dv = (value(tr.state[k + 1]) - value(tr.state[k - 1])) / (2 * h);
    const double normalized = (dv + (with_cost ? tr.integrand[k] : 0.0)) / norm2;
    ++out.checked_samples;
    out.max_normalized = std::max(out.max_normalized, normalized);
    if (!(normalized < 10 * h)) ++out.failing_samples;
  }
  out.pass = out.failing_samples == 0;
  return out;
}

std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream os;
  os.precision(17);
  if (tr.state.empty()) return "t\n";
  os << "t";
  for (Index a = 0; a < tr.state[0].size(); ++a) os << ",x" << a;
  for (Index a = 0; a < tr.control[0].size(); ++a) os << ",u" << a;
  for (Index a = 0; a < tr.applied[0].size(); ++a) os << ",uF" << a;
  os << ",cost";
  if (!tr.lyapunov.empty()) os << ",V";
  os << '\n';
  for (std::size_t k = 0; k < tr.time.size(); ++k) {
    os << tr.time[k];
    for (Index a = 0; a < tr.state[k].size(); ++a) os << ',' << tr.state[k](a);
    for (Index a = 0; a < tr.control[k].size(); ++a) os << ',' << tr.control[k](a);
    for (Index a = 0; a < tr.applied[k].size(); ++a) os << ',' << tr.applied[k](a);
    os << ',' << tr.cost[k];
    if (!tr.lyapunov.empty()) os << ',' << tr.lyapunov[k];
    os << '\n';
  }
  return os.str();
}

}  // namespace rdgcc
