#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thermomap/endpoint.hpp"
#include "thermomap/field.hpp"

namespace thermomap {

inline constexpr double kShortIntervalPeriod = 1.0;    // one query per second
inline constexpr double kMediumIntervalPeriod = 60.0;  // one query per minute

struct RosterEntry {
  std::string sensor_id;
  std::uint8_t address = 0;
  friend bool operator==(const RosterEntry&, const RosterEntry&) = default;
};

/// One poll cycle of a room: decoded samples plus the sensors that did not answer.
struct RoomReading {
  std::string room_id;
  double t = 0.0;
  std::vector<SensorSample> samples;
  std::vector<std::string> missing;
  friend bool operator==(const RoomReading&, const RoomReading&) = default;
};

std::string room_reading_to_json(const RoomReading& reading);
RoomReading room_reading_from_json(std::string_view text);

// --- uplink (read-property) framing ------------------------------------------
// [4B length BE][1B version=1][1B op][1B len][room_id][1B len][property][payload]
// length counts every byte after the length field. Error frames (op 0xE0)
// carry a 2-byte big-endian code as payload; the others carry JSON.

inline constexpr std::uint8_t kUplinkVersion = 1;

enum class UplinkOp : std::uint8_t { read_property = 0x10, response = 0x90, error = 0xE0 };

enum class PropertyError : std::uint16_t {
  unknown_property = 1,
  unknown_sensor = 2,
  no_data = 3,
  unknown_room = 4,
  malformed = 5,
};

std::string_view to_string(PropertyError code) noexcept;

struct UplinkFrame {
  UplinkOp op = UplinkOp::read_property;
  std::string room_id;
  std::string property;
  std::string payload;
  friend bool operator==(const UplinkFrame&, const UplinkFrame&) = default;
};

std::vector<std::uint8_t> encode_uplink(const UplinkFrame& frame);
std::optional<UplinkFrame> decode_uplink(std::span<const std::uint8_t> bytes);

/// Properties: latest_cycle, roster, poll_period, sensor_latest (needs sensor_id).
struct PropertyRequest {
  std::string room_id;
  std::string property;
  std::string sensor_id;
};

struct PropertyResponse {
  std::string room_id;
  std::string property;
  std::optional<PropertyError> error;
  std::string payload;  // JSON when ok

  bool ok() const { return !error.has_value(); }
};

UplinkFrame to_frame(const PropertyRequest& request);
UplinkFrame to_frame(const PropertyResponse& response);
PropertyRequest request_from_frame(const UplinkFrame& frame);
PropertyResponse response_from_frame(const UplinkFrame& frame);

class Concentrator;

/// Raw register access to one end-point through the concentrator, bypassing
/// the poll cache.
class DebugTap {
 public:
  /// nullopt is a NACK; a link timeout throws protocol_error.
  std::optional<std::uint16_t> read(std::uint16_t addr);
  bool write(std::uint16_t addr, std::uint16_t value);
  const std::string& sensor_id() const { return sensor_id_; }

 private:
  friend class Concentrator;
  DebugTap(Concentrator& dc, std::string sensor_id, std::uint8_t address)
      : dc_(&dc), sensor_id_(std::move(sensor_id)), address_(address) {}

  Concentrator* dc_;
  std::string sensor_id_;
  std::uint8_t address_;
};

/// Tier-2 room gateway: polls its end-points over a star link and answers
/// read-property requests from the cached last cycle.
class Concentrator {
 public:
  Concentrator(std::string room_id, double poll_period, std::uint64_t link_seed = 0);

  Concentrator(const Concentrator&) = delete;
  Concentrator& operator=(const Concentrator&) = delete;

  Endpoint& add_endpoint(std::string sensor_id, const EndpointConfig& config, Endpoint::TruthSource truth = {},
                         LinkParams params = {});

  /// Reads TEMP_LATEST, RH_LATEST and SEQ_LATEST from every roster entry in
  /// order. A read that times out is retried once; failing that the sensor
  /// is listed as missing. t must be a multiple of the poll period.
  RoomReading poll_cycle(double t);

  /// Writes CMD=SYNC to every end-point; returns how many acknowledged.
  std::size_t broadcast_sync(double t);

  /// Moves every end-point's clock to t (scheduled samples are taken).
  void advance_endpoints(double t);

  /// Never touches the end-points.
  PropertyResponse serve_read_property(const PropertyRequest& request) const;
  std::vector<std::uint8_t> handle_uplink(std::span<const std::uint8_t> bytes) const;

  DebugTap debug_tap(std::string_view sensor_id);

  std::shared_ptr<const RoomReading> last_cycle() const;
  const std::string& room_id() const { return room_id_; }
  double poll_period() const { return poll_period_; }
  const std::vector<RosterEntry>& roster() const { return roster_; }
  StarLink& link() { return link_; }
  const StarLink& link() const { return link_; }
  double clock() const { return clock_; }

 private:
  friend class DebugTap;
  std::optional<WireResponse> exchange(const WireRequest& request, double t);

  std::string room_id_;
  double poll_period_;
  StarLink link_;
  std::vector<RosterEntry> roster_;
  double clock_ = 0.0;
  std::optional<double> last_poll_t_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const RoomReading> last_;
};

/// Shared uplink bus of one building level; requests are delivered in
/// arrival order to the concentrator named in the frame.
class LevelBus {
 public:
  explicit LevelBus(int level) : level_(level) {}

  void attach(const Concentrator& dc);
  std::vector<std::uint8_t> transact(std::span<const std::uint8_t> request);
  PropertyResponse read_property(const PropertyRequest& request);

  int level() const { return level_; }
  std::uint64_t frame_count() const;

 private:
  int level_;
  std::map<std::string, const Concentrator*, std::less<>> attached_;
  mutable std::mutex mutex_;
  std::uint64_t frames_ = 0;
};

}  // namespace thermomap
