#pragma once

#include "safeloop/analysis.hpp"
#include "safeloop/sim.hpp"
#include "safeloop/synthesis.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace safeloop::cli {

nlohmann::json certificate_to_json(const Certificate& c);
nlohmann::json analysis_to_json(const AnalysisResult& r);
nlohmann::json synthesis_to_json(const SynthesisResult& r);
nlohmann::json synthesis_certificate_to_json(const SynthesisCertificate& c);
nlohmann::json safety_to_json(const SafetyReport& r);

/// Entry of a report's "ellipses" list, consumed by the plot command.
nlohmann::json ellipse_entry(const std::string& label, const Matrix& shape, const Vector& center);

/// Pretty-printed with a trailing newline; the whole file is written at once.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
void write_text_file(const std::filesystem::path& path, const std::string& body);

}  // namespace safeloop::cli
