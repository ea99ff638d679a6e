#include "rdgcc/io.hpp"

#include "rdgcc/errors.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace rdgcc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  return j.at(key);
}

Index index_field(const Json& j, const char* key, const std::string& where) {
  const Json& v = field(j, key, where);
  if (!v.is_number_integer()) throw InputError(where + "." + key + ": expected an integer");
  return v.get<Index>();
}

std::vector<MatrixXd> matrix_list(const Json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array of matrices");
  std::vector<MatrixXd> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(matrix_from_json(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

Json matrix_list_to_json(const std::vector<MatrixXd>& ms) {
  Json out = Json::array();
  for (const auto& m : ms) out.push_back(matrix_to_json(m));
  return out;
}

double real(const Json& v, const std::string& where) {
  if (!v.is_number()) throw InputError(where + ": expected a number");
  return v.get<double>();
}

}  // namespace

Json matrix_to_json(const MatrixXd& m) {
  Json out = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

MatrixXd matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InputError(where + ": expected a non-empty array of rows");
  const auto rows = static_cast<Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) throw InputError(where + ": rows must be non-empty arrays");
  const auto cols = static_cast<Index>(j[0].size());
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const Json& row = j[r];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw InputError(where + ": row " + std::to_string(r) + " has the wrong length");
    for (Index c = 0; c < cols; ++c)
      m(r, c) = real(row[c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return m;
}

Json vector_to_json(const VectorXd& v) {
  Json out = Json::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(number(v(k)));
  return out;
}

VectorXd vector_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array of numbers");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Index>(k)) = real(j[k], where + "[" + std::to_string(k) + "]");
  return v;
}

SystemSpec system_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("system document must be a JSON object");
  SystemSpec spec;
  const Json& subs = field(j, "subsystems", "system");
  if (!subs.is_array()) throw InputError("system.subsystems: expected an array");
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const std::string where = "subsystems[" + std::to_string(i) + "]";
    PolytopicSubsystemd sub;
    sub.state_dim = index_field(subs[i], "state_dim", where);
    sub.input_dim = index_field(subs[i], "input_dim", where);
    sub.coupling_dim = index_field(subs[i], "coupling_dim", where);
    sub.vertex_A = matrix_list(field(subs[i], "A_vertices", where), where + ".A_vertices");
    sub.vertex_B = matrix_list(field(subs[i], "B_vertices", where), where + ".B_vertices");
    spec.system.subsystems.push_back(std::move(sub));
  }
  if (j.contains("links")) {
    const Json& links = j.at("links");
    if (!links.is_array()) throw InputError("system.links: expected an array");
    for (std::size_t k = 0; k < links.size(); ++k) {
      const std::string where = "links[" + std::to_string(k) + "]";
      const Index from = index_field(links[k], "from", where);
      const Index to = index_field(links[k], "to", where);
      if (spec.system.links.count({to, from})) throw InputError(where + ": duplicate link");
      spec.system.links[{to, from}] = {matrix_from_json(field(links[k], "G", where), where + ".G"),
                                       matrix_from_json(field(links[k], "W", where), where + ".W")};
    }
  }
  if (j.contains("cost")) {
    const Json& cost = j.at("cost");
    spec.cost.Q = matrix_list(field(cost, "Q", "cost"), "cost.Q");
    spec.cost.R = matrix_list(field(cost, "R", "cost"), "cost.R");
    spec.has_cost = true;
  }
  if (j.contains("failures")) {
    const Json& f = j.at("failures");
    const Json& lambda = field(f, "lambda", "failures");
    const Json& gamma = field(f, "gamma", "failures");
    if (!lambda.is_array() || !gamma.is_array()) throw InputError("failures.lambda and failures.gamma must be arrays");
    for (std::size_t i = 0; i < lambda.size(); ++i)
      spec.failures.lambda.push_back(vector_from_json(lambda[i], "failures.lambda[" + std::to_string(i) + "]"));
    for (std::size_t i = 0; i < gamma.size(); ++i)
      spec.failures.gamma.push_back(vector_from_json(gamma[i], "failures.gamma[" + std::to_string(i) + "]"));
  } else {
    spec.failures = FailureModeld::nominal(spec.system);
  }
  return spec;
}

Json to_json(const SystemSpec& spec) {
  Json j;
  Json subs = Json::array();
  for (const auto& sub : spec.system.subsystems)
    subs.push_back({{"state_dim", sub.state_dim},
                    {"input_dim", sub.input_dim},
                    {"coupling_dim", sub.coupling_dim},
                    {"A_vertices", matrix_list_to_json(sub.vertex_A)},
                    {"B_vertices", matrix_list_to_json(sub.vertex_B)}});
  j["subsystems"] = std::move(subs);
  Json links = Json::array();
  for (const auto& [key, link] : spec.system.links)
    links.push_back({{"from", key.second}, {"to", key.first}, {"G", matrix_to_json(link.G)}, {"W", matrix_to_json(link.W)}});
  j["links"] = std::move(links);
  if (spec.has_cost) j["cost"] = {{"Q", matrix_list_to_json(spec.cost.Q)}, {"R", matrix_list_to_json(spec.cost.R)}};
  Json lambda = Json::array(), gamma = Json::array();
  for (const auto& v : spec.failures.lambda) lambda.push_back(vector_to_json(v));
  for (const auto& v : spec.failures.gamma) gamma.push_back(vector_to_json(v));
  j["failures"] = {{"lambda", lambda}, {"gamma", gamma}};
  return j;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return Json::parse(buffer.str());
  } catch (const Json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw NumericalError("sha256 digest failed");
  std::ostringstream os;
  for (unsigned int k = 0; k < length; ++k) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[k]);
  return os.str();
}

Json to_json(const SolverOptions& o) {
  return {{"tolerance", o.tolerance},
          {"max_iterations", o.max_iterations},
          {"backend", o.backend},
          {"variable_bound", o.variable_bound}};
}

Json to_json(const SynthesisOptions& o) {
  return {{"strictness", o.strictness},
          {"solver", to_json(o.solver)},
          {"optimize_trace", o.optimize_trace},
          {"parameter_independent", o.parameter_independent},
          {"fix_zero_gain", o.fix_zero_gain}};
}

SynthesisOptions synthesis_options_from_json(const Json& j) {
  SynthesisOptions o;
  o.strictness = j.value("strictness", o.strictness);
  o.optimize_trace = j.value("optimize_trace", o.optimize_trace);
  o.parameter_independent = j.value("parameter_independent", o.parameter_independent);
  o.fix_zero_gain = j.value("fix_zero_gain", o.fix_zero_gain);
  if (j.contains("solver")) {
    const Json& s = j.at("solver");
    o.solver.tolerance = s.value("tolerance", o.solver.tolerance);
    o.solver.max_iterations = s.value("max_iterations", o.solver.max_iterations);
    o.solver.backend = s.value("backend", o.solver.backend);
    o.solver.variable_bound = s.value("variable_bound", o.solver.variable_bound);
  }
  return o;
}

namespace {

SdpStatus status_from_string(const std::string& s) {
  if (s == "feasible") return SdpStatus::Feasible;
  if (s == "infeasible") return SdpStatus::Infeasible;
  if (s == "inconclusive") return SdpStatus::Inconclusive;
  throw InputError("unknown solver status '" + s + "'");
}

}  // namespace

Json to_json(const SynthesisResult& result) {
  Json j;
  j["mode"] = to_string(result.mode);
  j["options"] = to_json(result.options);
  j["feasible"] = result.feasible();
  Json subs = Json::array();
  for (const auto& s : result.subsystems) {
    Json residuals = Json::array();
    for (const auto& r : s.residuals)
      residuals.push_back({{"constraint", r.name}, {"max_eigenvalue", number(r.max_eigenvalue)}, {"strictness", r.strictness}});
    Json sub = {{"index", s.index},
                {"status", to_string(s.status)},
                {"margin", number(s.margin)},
                {"max_violation", number(s.max_violation)},
                {"iterations", s.iterations},
                {"diagnostics", s.diagnostics},
                {"residuals", residuals},
                {"Y", matrix_list_to_json(s.Y)},
                {"X", matrix_list_to_json(s.X)}};
    if (s.V.size()) sub["V"] = matrix_to_json(s.V);
    if (s.N.size()) sub["N"] = matrix_to_json(s.N);
    if (s.K.size()) sub["K"] = matrix_to_json(s.K);
    subs.push_back(std::move(sub));
  }
  j["subsystems"] = std::move(subs);
  if (result.trace_objective) j["trace_objective"] = *result.trace_objective;
  if (result.mode == SynthesisMode::ReliableGcc && result.feasible())
    j["expected_cost_bound"] = expected_cost_bound(result);
  return j;
}

SynthesisResult result_from_json(const Json& j) {
  SynthesisResult result;
  result.mode = synthesis_mode_from_string(field(j, "mode", "result").get<std::string>());
  if (j.contains("options")) result.options = synthesis_options_from_json(j.at("options"));
  const Json& subs = field(j, "subsystems", "result");
  if (!subs.is_array()) throw InputError("result.subsystems: expected an array");
  for (std::size_t k = 0; k < subs.size(); ++k) {
    const std::string where = "result.subsystems[" + std::to_string(k) + "]";
    const Json& s = subs[k];
    SubsystemSynthesis sub;
    sub.index = index_field(s, "index", where);
    sub.status = status_from_string(field(s, "status", where).get<std::string>());
    sub.margin = s.value("margin", 0.0);
    sub.max_violation = s.contains("max_violation") && s.at("max_violation").is_number() ? s.at("max_violation").get<double>() : 0.0;
    sub.iterations = s.value("iterations", 0);
    sub.diagnostics = s.value("diagnostics", std::string());
    if (s.contains("residuals"))
      for (const auto& r : s.at("residuals"))
        sub.residuals.push_back({r.value("constraint", std::string()),
                                 r.at("max_eigenvalue").is_number() ? r.at("max_eigenvalue").get<double>() : NAN,
                                 r.value("strictness", 0.0)});
    sub.Y = matrix_list(field(s, "Y", where), where + ".Y");
    sub.X = matrix_list(field(s, "X", where), where + ".X");
    if (s.contains("V")) sub.V = matrix_from_json(s.at("V"), where + ".V");
    if (s.contains("N")) sub.N = matrix_from_json(s.at("N"), where + ".N");
    if (s.contains("K")) sub.K = matrix_from_json(s.at("K"), where + ".K");
    result.subsystems.push_back(std::move(sub));
  }
  if (j.contains("trace_objective")) result.trace_objective = j.at("trace_objective").get<double>();
  return result;
}

Json to_json(const VerificationReport& report) {
  Json checks = Json::array();
  for (const auto& c : report.checks)
    checks.push_back({{"category", c.category}, {"name", c.name}, {"point", c.point}, {"value", number(c.value)}, {"pass", c.pass}});
  Json worst;
  for (const auto& [k, v] : report.worst_by_category()) worst[k] = number(v);
  return {{"passed", report.passed()},
          {"failures", report.failures()},
          {"vacuous", report.vacuous},
          {"note", report.note},
          {"worst_by_category", worst},
          {"checks", checks}};
}

Json to_json(const MonteCarloSummary& summary, bool include_samples) {
  Json j = {{"samples", summary.samples.size()},
            {"violations", summary.violations},
            {"tail_flags", summary.tail_flags},
            {"max_cost", number(summary.max_cost)},
            {"max_ratio", number(summary.max_ratio)},
            {"invariant_violations", summary.invariant_violations},
            {"surrogate", "J(T) + V(x(T)) against max_k sum_i x_i0^T X_ik x_i0"}};
  if (include_samples) {
    Json rows = Json::array();
    for (const auto& s : summary.samples)
      rows.push_back({{"index", s.index},
                      {"alpha", vector_to_json(s.alpha.weights())},
                      {"interconnection", to_string(s.interconnection)},
                      {"failure", to_string(s.failure)},
                      {"x0", vector_to_json(s.x0)},
                      {"cost", number(s.cost)},
                      {"terminal_lyapunov", number(s.terminal_lyapunov)},
                      {"surrogate", number(s.surrogate)},
                      {"bound", number(s.bound)},
                      {"violation", s.violation},
                      {"tail_flag", s.tail_flag},
                      {"diverged", s.diverged}});
    j["sample_details"] = std::move(rows);
  }
  return j;
}

namespace {

std::string kind_name(VariableKind kind) {
  switch (kind) {
    case VariableKind::SymmetricPositiveDefinite: return "symmetric-pd";
    case VariableKind::Symmetric: return "symmetric";
    case VariableKind::General: return "general";
  }
  return "general";
}

Json declaration(const VariableDecl& v) {
  return {{"id", v.id}, {"rows", v.rows}, {"cols", v.cols}, {"kind", kind_name(v.kind)}};
}

}  // namespace

Json to_json(const AffineLmi& lmi) {
  Json vars = Json::array(), terms = Json::array();
  for (const auto& v : lmi.variables()) vars.push_back(declaration(v));
  for (const auto& t : lmi.terms())
    terms.push_back({{"variable", t.variable},
                     {"block", {t.block_row, t.block_col}},
                     {"transposed", t.transposed},
                     {"left", matrix_to_json(t.left)},
                     {"right", matrix_to_json(t.right)}});
  return {{"name", lmi.name()},
          {"blocks", lmi.block_sizes()},
          {"strictness", lmi.strictness()},
          {"convention", "M = C + sum(L V R placed at (r,c) and its transpose at (c,r)); M <= -strictness I"},
          {"variables", vars},
          {"constant", matrix_to_json(lmi.constant())},
          {"terms", terms}};
}

Json to_json(const SdpProblem& problem) {
  Json vars = Json::array(), cons = Json::array(), objective = Json::array();
  for (const auto& v : problem.variables) vars.push_back(declaration(v));
  for (const auto& c : problem.constraints) cons.push_back(to_json(c));
  for (const auto& o : problem.objective) objective.push_back({{"variable", o.variable}, {"weight", matrix_to_json(o.weight)}});
  return {{"variables", vars}, {"constraints", cons}, {"objective", objective}};
}

Json provenance(const std::string& input_sha256, std::uint64_t seed) {
  return {{"tool", kToolName}, {"version", kToolVersion}, {"input_sha256", input_sha256}, {"seed", seed}};
}

}  // namespace rdgcc
