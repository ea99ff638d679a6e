#pragma once

#include "rdgcc/fixtures.hpp"
#include "rdgcc/sim.hpp"
#include "rdgcc/synthesis.hpp"
#include "rdgcc/verify.hpp"

#include <json.hpp>

#include <string>

namespace rdgcc {

using Json = nlohmann::json;

inline constexpr const char* kToolName = "rdgcc";
inline constexpr const char* kToolVersion = "0.1.0";

/// Row-major nested arrays.
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& where);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j, const std::string& where);

/// System document; `cost` is optional and `failures` defaults to nominal operation. Throws InputError.
SystemSpec system_from_json(const Json& j);
Json to_json(const SystemSpec& spec);

/// Reads and parses a file; throws InputError on I/O or syntax errors.
Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
/// Two-space indented dump followed by a newline.
std::string dump(const Json& j);

std::string sha256_hex(const std::string& data);

Json to_json(const SolverOptions& options);
Json to_json(const SynthesisOptions& options);
SynthesisOptions synthesis_options_from_json(const Json& j);

Json to_json(const SynthesisResult& result);
SynthesisResult result_from_json(const Json& j);

Json to_json(const VerificationReport& report);
Json to_json(const MonteCarloSummary& summary, bool include_samples = true);

/// Debug dump with block layout, constant part and term list.
Json to_json(const AffineLmi& lmi);
/// Problem export: variables, constraints in the dump format above, objective.
Json to_json(const SdpProblem& problem);

/// Provenance block embedded in every artifact.
Json provenance(const std::string& input_sha256, std::uint64_t seed);

}  // namespace rdgcc
