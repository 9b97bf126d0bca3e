#pragma once

#include "safeloop/types.hpp"

#include <json.hpp>

#include <string>

namespace safeloop {

/// Row-major nested arrays. A 1x1 matrix may also be written as a bare number
/// and a vector as a flat array.
nlohmann::json matrix_to_json(const Matrix& m);
nlohmann::json vector_to_json(const Vector& v);

/// `where` names the field in error messages.
Matrix matrix_from_json(const nlohmann::json& j, const std::string& where);
Vector vector_from_json(const nlohmann::json& j, const std::string& where);

}  // namespace safeloop
