#pragma once

#include "safeloop/sdp.hpp"

#include <json.hpp>

#include <filesystem>

namespace safeloop {

// Structured dump of an SdpProblem for solver-independent replay. Matrices
// use the same nested-array syntax as problem configs.
nlohmann::json problem_to_json(const SdpProblem& problem);
SdpProblem problem_from_json(const nlohmann::json& j);

void dump_problem(const SdpProblem& problem, const std::filesystem::path& path);
SdpProblem load_problem(const std::filesystem::path& path);

}  // namespace safeloop
