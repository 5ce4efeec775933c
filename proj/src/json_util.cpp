#include "json_util.hpp"

#include <algorithm>

namespace thermomap::detail {

namespace {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

}  // namespace

void field_error(const std::string& path, const std::string& message) {
  throw Error(Errc::parse_error, path + ": " + message);
}

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points one past the offending character.
    const std::size_t offset = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
    const auto head = text.substr(0, offset);
    const auto line = 1 + std::count(head.begin(), head.end(), '\n');
    const auto last_nl = head.rfind('\n');
    const auto column = last_nl == std::string_view::npos ? offset + 1 : offset - last_nl;
    throw Error(Errc::parse_error,
                "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + e.what());
  }
}

const json& require(const json& object, std::string_view key, const std::string& path) {
  if (!object.is_object()) field_error(path, "expected an object");
  const auto it = object.find(key);
  if (it == object.end()) field_error(join(path, key), "missing required field");
  return *it;
}

double require_number(const json& object, std::string_view key, const std::string& path) {
  const json& v = require(object, key, path);
  if (!v.is_number()) field_error(join(path, key), "expected a number");
  return v.get<double>();
}

std::string require_string(const json& object, std::string_view key, const std::string& path) {
  const json& v = require(object, key, path);
  if (!v.is_string()) field_error(join(path, key), "expected a string");
  return v.get<std::string>();
}

Vec3 require_vec3(const json& object, std::string_view key, const std::string& path) {
  const json& v = require(object, key, path);
  if (!v.is_array() || v.size() != 3 ||
      !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); })) {
    field_error(join(path, key), "expected array of 3 numbers");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

double number_or(const json& object, std::string_view key, double fallback, const std::string& path) {
  const auto it = object.find(key);
  if (it == object.end()) return fallback;
  if (!it->is_number()) field_error(join(path, key), "expected a number");
  return it->get<double>();
}

std::string string_or(const json& object, std::string_view key, std::string fallback,
                      const std::string& path) {
  const auto it = object.find(key);
  if (it == object.end()) return fallback;
  if (!it->is_string()) field_error(join(path, key), "expected a string");
  return it->get<std::string>();
}

json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

}  // namespace thermomap::detail
