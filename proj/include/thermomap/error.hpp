#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace thermomap {

enum class Errc {
  parse_error,
  invariant_violation,
  invalid_argument,
  extrapolation,
  unknown_building,
  unknown_room,
  unknown_sensor,
  unknown_property,
  no_frames,
  empty_range,
  mismatch,
  protocol_error,
  io_error,
};

std::string_view to_string(Errc code) noexcept;

// Config-class errors map to CLI exit status 2, everything else to 3.
bool is_config_error(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace thermomap
