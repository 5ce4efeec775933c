#include "thermomap/concentrator.hpp"

#include <cmath>

#include "json_util.hpp"
#include "thermomap/error.hpp"

namespace thermomap {

using detail::json;

namespace {

json sample_to_json(const SensorSample& s) {
  return {{"sensor_id", s.sensor_id}, {"t", s.t}, {"temp", s.temp}, {"rh", s.rh}, {"seq", s.seq}};
}

SensorSample sample_from_json(const json& j, const std::string& path) {
  SensorSample s;
  s.sensor_id = detail::require_string(j, "sensor_id", path);
  s.t = detail::require_number(j, "t", path);
  s.temp = detail::require_number(j, "temp", path);
  s.rh = detail::require_number(j, "rh", path);
  s.seq = static_cast<std::uint32_t>(detail::number_or(j, "seq", 0.0, path));
  return s;
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  if (s.size() > 255) throw Error(Errc::invalid_argument, "uplink field longer than 255 bytes");
  out.push_back(static_cast<std::uint8_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

PropertyResponse error_response(const PropertyRequest& r, PropertyError e) {
  return {r.room_id, r.property, e, {}};
}

}  // namespace

std::string room_reading_to_json(const RoomReading& reading) {
  json samples = json::array();
  for (const auto& s : reading.samples) samples.push_back(sample_to_json(s));
  return json{{"room_id", reading.room_id}, {"t", reading.t}, {"samples", samples}, {"missing", reading.missing}}
      .dump();
}

RoomReading room_reading_from_json(std::string_view text) {
  const json j = detail::parse_document(text);
  RoomReading r;
  r.room_id = detail::require_string(j, "room_id", "reading");
  r.t = detail::require_number(j, "t", "reading");
  const json& samples = detail::require(j, "samples", "reading");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    r.samples.push_back(sample_from_json(samples[i], "reading.samples[" + std::to_string(i) + "]"));
  }
  for (const auto& m : detail::require(j, "missing", "reading")) r.missing.push_back(m.get<std::string>());
  return r;
}

std::string_view to_string(PropertyError code) noexcept {
  switch (code) {
    case PropertyError::unknown_property: return "UNKNOWN_PROPERTY";
    case PropertyError::unknown_sensor: return "UNKNOWN_SENSOR";
    case PropertyError::no_data: return "NO_DATA";
    case PropertyError::unknown_room: return "UNKNOWN_ROOM";
    case PropertyError::malformed: return "MALFORMED";
  }
  return "UNKNOWN";
}

std::vector<std::uint8_t> encode_uplink(const UplinkFrame& frame) {
  std::vector<std::uint8_t> out{0, 0, 0, 0, kUplinkVersion, static_cast<std::uint8_t>(frame.op)};
  put_string(out, frame.room_id);
  put_string(out, frame.property);
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  const auto n = static_cast<std::uint32_t>(out.size() - 4);
  out[0] = static_cast<std::uint8_t>(n >> 24);
  out[1] = static_cast<std::uint8_t>(n >> 16);
  out[2] = static_cast<std::uint8_t>(n >> 8);
  out[3] = static_cast<std::uint8_t>(n);
  return out;
}

std::optional<UplinkFrame> decode_uplink(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 4) return std::nullopt;
  const std::uint32_t n = (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
                          (std::uint32_t{bytes[2]} << 8) | std::uint32_t{bytes[3]};
  if (bytes.size() != 4 + static_cast<std::size_t>(n)) return std::nullopt;
  std::size_t pos = 4;
  if (bytes[pos++] != kUplinkVersion) return std::nullopt;
  const std::uint8_t op = bytes[pos++];
  if (op != 0x10 && op != 0x90 && op != 0xE0) return std::nullopt;
  UplinkFrame f;
  f.op = static_cast<UplinkOp>(op);
  for (std::string* field : {&f.room_id, &f.property}) {
    if (pos >= bytes.size()) return std::nullopt;
    const std::size_t len = bytes[pos++];
    if (pos + len > bytes.size()) return std::nullopt;
    field->assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  f.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  if (f.op == UplinkOp::error && f.payload.size() != 2) return std::nullopt;
  return f;
}

UplinkFrame to_frame(const PropertyRequest& request) {
  json args = json::object();
  if (!request.sensor_id.empty()) args["sensor_id"] = request.sensor_id;
  return {UplinkOp::read_property, request.room_id, request.property, args.dump()};
}

UplinkFrame to_frame(const PropertyResponse& response) {
  if (response.error) {
    const auto code = static_cast<std::uint16_t>(*response.error);
    std::string payload{static_cast<char>(code >> 8), static_cast<char>(code & 0xFF)};
    return {UplinkOp::error, response.room_id, response.property, payload};
  }
  return {UplinkOp::response, response.room_id, response.property, response.payload};
}

PropertyRequest request_from_frame(const UplinkFrame& frame) {
  if (frame.op != UplinkOp::read_property) throw Error(Errc::protocol_error, "not a read-property request");
  PropertyRequest r{frame.room_id, frame.property, {}};
  if (!frame.payload.empty()) {
    const json args = detail::parse_document(frame.payload);
    if (args.is_object() && args.contains("sensor_id") && args["sensor_id"].is_string()) {
      r.sensor_id = args["sensor_id"].get<std::string>();
    }
  }
  return r;
}

PropertyResponse response_from_frame(const UplinkFrame& frame) {
  PropertyResponse r{frame.room_id, frame.property, std::nullopt, {}};
  if (frame.op == UplinkOp::error) {
    const auto code = static_cast<std::uint16_t>((static_cast<std::uint8_t>(frame.payload[0]) << 8) |
                                                 static_cast<std::uint8_t>(frame.payload[1]));
    r.error = static_cast<PropertyError>(code);
  } else if (frame.op == UplinkOp::response) {
    r.payload = frame.payload;
  } else {
    throw Error(Errc::protocol_error, "not a read-property response");
  }
  return r;
}

std::optional<std::uint16_t> DebugTap::read(std::uint16_t addr) {
  const auto r = dc_->exchange({WireOp::read, address_, addr, 0}, dc_->clock());
  if (!r) throw Error(Errc::protocol_error, "debug read of '" + sensor_id_ + "' timed out");
  return r->ack ? std::optional<std::uint16_t>(r->value) : std::nullopt;
}

bool DebugTap::write(std::uint16_t addr, std::uint16_t value) {
  const auto r = dc_->exchange({WireOp::write, address_, addr, value}, dc_->clock());
  if (!r) throw Error(Errc::protocol_error, "debug write to '" + sensor_id_ + "' timed out");
  return r->ack;
}

Concentrator::Concentrator(std::string room_id, double poll_period, std::uint64_t link_seed)
    : room_id_(std::move(room_id)), poll_period_(poll_period), link_(link_seed) {
  if (!(poll_period_ > 0.0)) throw Error(Errc::invalid_argument, "poll period must be > 0");
}

Endpoint& Concentrator::add_endpoint(std::string sensor_id, const EndpointConfig& config,
                                     Endpoint::TruthSource truth, LinkParams params) {
  for (const auto& e : roster_) {
    if (e.sensor_id == sensor_id) throw Error(Errc::invariant_violation, "duplicate sensor '" + sensor_id + "'");
  }
  Endpoint& ep = link_.attach(Endpoint(config, std::move(truth)), params);
  roster_.push_back({std::move(sensor_id), config.sensor_id});
  return ep;
}

std::optional<WireResponse> Concentrator::exchange(const WireRequest& request, double t) {
  // One retry after the first timeout.
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (auto r = link_.transact(request, t + attempt * StarLink::kReadTimeout)) return r;
  }
  return std::nullopt;
}

void Concentrator::advance_endpoints(double t) {
  for (auto& ep : link_.endpoints()) ep.advance_to(t);
  clock_ = std::max(clock_, t);
}

std::size_t Concentrator::broadcast_sync(double t) {
  clock_ = std::max(clock_, t);
  std::size_t acked = 0;
  for (const auto& entry : roster_) {
    link_.endpoint(entry.address).advance_to(t);
    const auto r = exchange({WireOp::write, entry.address, reg::cmd, cmd::sync}, t);
    if (r && r->ack) ++acked;
  }
  return acked;
}

RoomReading Concentrator::poll_cycle(double t) {
  if (roster_.empty()) throw Error(Errc::invariant_violation, "concentrator '" + room_id_ + "' has an empty roster");
  const double ratio = t / poll_period_;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, std::abs(ratio))) {
    throw Error(Errc::invalid_argument, "poll time " + std::to_string(t) + " is not aligned to the poll period");
  }
  if (last_poll_t_ && t <= *last_poll_t_) throw Error(Errc::invalid_argument, "poll time must increase");
  clock_ = std::max(clock_, t);

  RoomReading reading{room_id_, t, {}, {}};
  for (const auto& entry : roster_) {
    std::array<std::uint16_t, 3> values{};
    bool ok = true;
    const std::array<std::uint16_t, 3> addrs{reg::temp_latest, reg::rh_latest, reg::seq_latest};
    for (std::size_t i = 0; i < addrs.size() && ok; ++i) {
      const auto r = exchange({WireOp::read, entry.address, addrs[i], 0}, t);
      ok = r && r->ack;
      if (ok) values[i] = r->value;
    }
    if (!ok || values[2] == 0) {  // seq 0: nothing sampled yet
      reading.missing.push_back(entry.sensor_id);
      continue;
    }
    const FieldValue v = decode_sample(values[0], values[1]);
    reading.samples.push_back({entry.sensor_id, t, v.temp, v.rh, values[2]});
  }
  last_poll_t_ = t;
  auto snapshot = std::make_shared<const RoomReading>(reading);
  {
    std::lock_guard lock(snapshot_mutex_);
    last_ = std::move(snapshot);
  }
  return reading;
}

std::shared_ptr<const RoomReading> Concentrator::last_cycle() const {
  std::lock_guard lock(snapshot_mutex_);
  return last_;
}

PropertyResponse Concentrator::serve_read_property(const PropertyRequest& request) const {
  if (request.room_id != room_id_) return error_response(request, PropertyError::unknown_room);
  const auto snapshot = last_cycle();
  PropertyResponse ok{room_id_, request.property, std::nullopt, {}};
  if (request.property == "latest_cycle") {
    if (!snapshot) return error_response(request, PropertyError::no_data);
    ok.payload = room_reading_to_json(*snapshot);
    return ok;
  }
  if (request.property == "roster") {
    json roster = json::array();
    for (const auto& e : roster_) roster.push_back({{"sensor_id", e.sensor_id}, {"address", e.address}});
    ok.payload = roster.dump();
    return ok;
  }
  if (request.property == "poll_period") {
    ok.payload = json(poll_period_).dump();
    return ok;
  }
  if (request.property == "sensor_latest") {
    const bool known = std::any_of(roster_.begin(), roster_.end(),
                                   [&](const RosterEntry& e) { return e.sensor_id == request.sensor_id; });
    if (!known) return error_response(request, PropertyError::unknown_sensor);
    if (!snapshot) return error_response(request, PropertyError::no_data);
    for (const auto& s : snapshot->samples) {
      if (s.sensor_id == request.sensor_id) {
        ok.payload = sample_to_json(s).dump();
        return ok;
      }
    }
    return error_response(request, PropertyError::no_data);
  }
  return error_response(request, PropertyError::unknown_property);
}

std::vector<std::uint8_t> Concentrator::handle_uplink(std::span<const std::uint8_t> bytes) const {
  const auto frame = decode_uplink(bytes);
  if (!frame || frame->op != UplinkOp::read_property) {
    return encode_uplink(to_frame(PropertyResponse{room_id_, "", PropertyError::malformed, {}}));
  }
  PropertyRequest request;
  try {
    request = request_from_frame(*frame);
  } catch (const Error&) {
    return encode_uplink(to_frame(PropertyResponse{frame->room_id, frame->property, PropertyError::malformed, {}}));
  }
  return encode_uplink(to_frame(serve_read_property(request)));
}

DebugTap Concentrator::debug_tap(std::string_view sensor_id) {
  for (const auto& e : roster_) {
    if (e.sensor_id == sensor_id) return DebugTap(*this, e.sensor_id, e.address);
  }
  throw Error(Errc::unknown_sensor, "sensor '" + std::string(sensor_id) + "' is not in the roster of '" + room_id_ + "'");
}

void LevelBus::attach(const Concentrator& dc) {
  std::lock_guard lock(mutex_);
  attached_[dc.room_id()] = &dc;
}

std::vector<std::uint8_t> LevelBus::transact(std::span<const std::uint8_t> request) {
  std::lock_guard lock(mutex_);
  ++frames_;
  const auto frame = decode_uplink(request);
  if (!frame) return encode_uplink(to_frame(PropertyResponse{"", "", PropertyError::malformed, {}}));
  const auto it = attached_.find(frame->room_id);
  if (it == attached_.end()) {
    return encode_uplink(to_frame(PropertyResponse{frame->room_id, frame->property, PropertyError::unknown_room, {}}));
  }
  return it->second->handle_uplink(request);
}

PropertyResponse LevelBus::read_property(const PropertyRequest& request) {
  const auto reply = transact(encode_uplink(to_frame(request)));
  const auto frame = decode_uplink(reply);
  if (!frame) throw Error(Errc::protocol_error, "malformed uplink response");
  return response_from_frame(*frame);
}

std::uint64_t LevelBus::frame_count() const {
  std::lock_guard lock(mutex_);
  return frames_;
}

}  // namespace thermomap
