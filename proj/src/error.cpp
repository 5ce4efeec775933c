#include "thermomap/error.hpp"

namespace thermomap {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::parse_error: return "parse error";
    case Errc::invariant_violation: return "invariant violation";
    case Errc::invalid_argument: return "invalid argument";
    case Errc::extrapolation: return "extrapolation";
    case Errc::unknown_building: return "unknown building";
    case Errc::unknown_room: return "unknown room";
    case Errc::unknown_sensor: return "unknown sensor";
    case Errc::unknown_property: return "unknown property";
    case Errc::no_frames: return "NO_FRAMES";
    case Errc::empty_range: return "empty range";
    case Errc::mismatch: return "mismatch";
    case Errc::protocol_error: return "protocol error";
    case Errc::io_error: return "io error";
  }
  return "error";
}

bool is_config_error(Errc code) noexcept {
  return code == Errc::parse_error || code == Errc::invariant_violation || code == Errc::invalid_argument;
}

}  // namespace thermomap
