#pragma once

#include <json.hpp>

#include <string>
#include <string_view>

#include "thermomap/error.hpp"
#include "thermomap/geometry.hpp"

namespace thermomap::detail {

using nlohmann::json;

/// Parses a JSON document; syntax errors are reported as "line L, column C".
json parse_document(std::string_view text);

/// Field access with a dotted path in every diagnostic, e.g.
/// "building.levels[0].rooms[2].min: expected array of 3 numbers".
const json& require(const json& object, std::string_view key, const std::string& path);
double require_number(const json& object, std::string_view key, const std::string& path);
std::string require_string(const json& object, std::string_view key, const std::string& path);
Vec3 require_vec3(const json& object, std::string_view key, const std::string& path);

double number_or(const json& object, std::string_view key, double fallback, const std::string& path);
std::string string_or(const json& object, std::string_view key, std::string fallback,
                      const std::string& path);

json to_json(const Vec3& v);

[[noreturn]] void field_error(const std::string& path, const std::string& message);

}  // namespace thermomap::detail
