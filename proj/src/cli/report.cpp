#include "safeloop/cli/report.hpp"

#include "safeloop/cli/config.hpp"
#include "safeloop/json_matrix.hpp"

#include <cmath>
#include <fstream>

namespace safeloop::cli {

using nlohmann::json;

namespace {

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

// Non-finite values have no JSON spelling.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json point_to_json(const GridPointReport& p) {
  return {{"alpha", p.alpha},
          {"beta", opt(p.beta)},
          {"delta", opt(p.delta)},
          {"status", std::string(to_string(p.status))},
          {"failed", std::string(to_string(p.failed))},
          {"objective", opt(p.objective)},
          {"message", p.message}};
}

json point_to_json(const SynthesisPoint& p) {
  return {{"alpha", p.alpha},
          {"beta", opt(p.beta)},
          {"delta", p.delta},
          {"status", std::string(to_string(p.status))},
          {"failed", std::string(to_string(p.failed))},
          {"objective", opt(p.objective)},
          {"message", p.message}};
}

}  // namespace

json certificate_to_json(const Certificate& c) {
  json j = {{"Q", matrix_to_json(c.Q)},
            {"alpha", c.alpha},
            {"beta", c.beta},
            {"delta", opt(c.delta)},
            {"contained", c.contained},
            {"tau", opt(c.tau)},
            {"objective", opt(c.objective)},
            {"lmi_margin", num(c.lmi_margin)},
            {"trace_Q", c.Q.trace()}};
  if (c.Ra) j["R_a"] = matrix_to_json(*c.Ra);
  return j;
}

json analysis_to_json(const AnalysisResult& r) {
  json points = json::array();
  for (const auto& p : r.points) points.push_back(point_to_json(p));
  return {{"verdict", std::string(to_string(r.verdict))},
          {"message", r.message},
          {"certificate", r.certificate ? certificate_to_json(*r.certificate) : json(nullptr)},
          {"grid_points", points}};
}

json synthesis_to_json(const SynthesisResult& r) {
  json points = json::array();
  for (const auto& p : r.points) points.push_back(point_to_json(p));
  json j = {{"feasible", r.feasible},
            {"message", r.message},
            {"alpha", r.alpha},
            {"beta", r.beta},
            {"delta", r.delta},
            {"objective", opt(r.objective)},
            {"perturbed", r.perturbed},
            {"grid_points", points}};
  if (r.feasible) {
    j["margins"] = {{"invariance", num(r.invariance_margin)},
                    {"coupling", num(r.coupling_margin)},
                    {"containment", num(r.containment_margin)}};
    j["condition_I_minus_XY"] = num(r.condition);
    j["R_a"] = matrix_to_json(r.Ra);
    j["eta"] = {{"X", matrix_to_json(r.eta->X)}, {"Y", matrix_to_json(r.eta->Y)}, {"A", matrix_to_json(r.eta->A)},
                {"B", matrix_to_json(r.eta->B)}, {"C", matrix_to_json(r.eta->C)}, {"D", matrix_to_json(r.eta->D)}};
    j["det_X"] = r.eta->X.determinant();
    j["trace_X"] = r.eta->X.trace();
  }
  return j;
}

json synthesis_certificate_to_json(const SynthesisCertificate& c) {
  return {{"passed", c.passed},
          {"failed_check", c.failed_check.empty() ? json(nullptr) : json(c.failed_check)},
          {"P_min_eigenvalue", num(c.p_min_eigenvalue)},
          {"lmi_margin", num(c.lmi_margin)},
          {"projection_error", opt(c.projection_error)},
          {"projection", certificate_to_json(c.certificate)}};
}

json safety_to_json(const SafetyReport& r) {
  return {{"max_safe_level", num(r.max_safe_level)},
          {"max_invariant_level", num(r.max_invariant_level)},
          {"first_violation", opt(r.first_violation)},
          {"first_invariant_violation", opt(r.first_invariant_violation)},
          {"attacks_admissible", r.attacks_admissible}};
}

json ellipse_entry(const std::string& label, const Matrix& shape, const Vector& center) {
  return {{"label", label}, {"shape", matrix_to_json(shape)}, {"center", vector_to_json(center)}};
}

void write_text_file(const std::filesystem::path& path, const std::string& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << body;
  if (!out) throw ConfigError("failed writing " + path.string());
}

void write_json_file(const std::filesystem::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace safeloop::cli
