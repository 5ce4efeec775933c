#include "thermomap/supervisor.hpp"

#include <algorithm>
#include <array>
#include <iterator>

#include "json_util.hpp"
#include "thermomap/error.hpp"

namespace thermomap {

using detail::json;

std::string frame_to_json(const ThermalFrame& frame) {
  json samples = json::object();
  for (const auto& [sensor_id, s] : frame.samples) {
    samples[sensor_id] = {
        {"room_id", s.room_id}, {"position", detail::to_json(s.position)}, {"temp", s.temp}, {"rh", s.rh}};
  }
  return json{{"building_id", frame.building_id},
              {"t", frame.t},
              {"completeness", frame.completeness},
              {"samples", std::move(samples)}}
      .dump();
}

ThermalFrame frame_from_json(std::string_view text) {
  const json j = detail::parse_document(text);
  ThermalFrame f;
  f.building_id = detail::require_string(j, "building_id", "frame");
  f.t = detail::require_number(j, "t", "frame");
  f.completeness = detail::require_number(j, "completeness", "frame");
  const json& samples = detail::require(j, "samples", "frame");
  if (!samples.is_object()) detail::field_error("frame.samples", "expected an object");
  for (const auto& [sensor_id, sj] : samples.items()) {
    const std::string path = "frame.samples." + sensor_id;
    f.samples.emplace(sensor_id, FrameSample{detail::require_string(sj, "room_id", path),
                                             detail::require_vec3(sj, "position", path),
                                             detail::require_number(sj, "temp", path),
                                             detail::require_number(sj, "rh", path)});
  }
  return f;
}

FrameStore::FrameStore(std::string building_id, std::optional<std::filesystem::path> file)
    : building_id_(std::move(building_id)), file_(std::move(file)) {
  if (!file_) return;
  if (std::filesystem::exists(*file_)) {
    std::ifstream in(*file_, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot read frame store " + file_->string());
    std::array<unsigned char, 4> len{};
    while (in.read(reinterpret_cast<char*>(len.data()), 4)) {
      const std::uint32_t n = (std::uint32_t{len[0]} << 24) | (std::uint32_t{len[1]} << 16) |
                              (std::uint32_t{len[2]} << 8) | std::uint32_t{len[3]};
      std::string body(n, '\0');
      if (!in.read(body.data(), n)) {
        throw Error(Errc::io_error, "truncated record in frame store " + file_->string());
      }
      ThermalFrame frame = frame_from_json(body);
      if (frame.building_id != building_id_) {
        throw Error(Errc::mismatch, "frame store " + file_->string() + " holds building '" + frame.building_id + "'");
      }
      if (!frames_.empty() && frame.t <= frames_.back().t) {
        throw Error(Errc::invariant_violation, "frame store " + file_->string() + " is not time-ordered");
      }
      frames_.push_back(std::move(frame));
    }
    if (in.gcount() != 0) throw Error(Errc::io_error, "truncated length prefix in " + file_->string());
  }
  out_.open(*file_, std::ios::binary | std::ios::app);
  if (!out_) throw Error(Errc::io_error, "cannot open frame store " + file_->string() + " for append");
}

void FrameStore::append(const ThermalFrame& frame) {
  std::unique_lock lock(mutex_);
  if (frame.building_id != building_id_) {
    throw Error(Errc::mismatch, "frame for '" + frame.building_id + "' appended to store of '" + building_id_ + "'");
  }
  if (!frames_.empty() && frame.t <= frames_.back().t) {
    throw Error(Errc::invariant_violation, "frame timestamps must strictly increase");
  }
  if (file_) {
    const std::string body = frame_to_json(frame);
    const auto n = static_cast<std::uint32_t>(body.size());
    const std::array<char, 4> len{static_cast<char>(n >> 24), static_cast<char>(n >> 16), static_cast<char>(n >> 8),
                                  static_cast<char>(n)};
    out_.write(len.data(), 4);
    out_.write(body.data(), static_cast<std::streamsize>(body.size()));
    out_.flush();
    if (!out_) throw Error(Errc::io_error, "write to frame store failed");
  }
  frames_.push_back(frame);
}

std::vector<ThermalFrame> FrameStore::range(double t0, double t1) const {
  std::shared_lock lock(mutex_);
  const auto cmp = [](const ThermalFrame& f, double t) { return f.t < t; };
  const auto first = std::lower_bound(frames_.begin(), frames_.end(), t0, cmp);
  const auto last = std::upper_bound(frames_.begin(), frames_.end(), t1,
                                     [](double t, const ThermalFrame& f) { return t < f.t; });
  if (first >= last) return {};
  return {first, last};
}

std::optional<ThermalFrame> FrameStore::earliest() const {
  std::shared_lock lock(mutex_);
  if (frames_.empty()) return std::nullopt;
  return frames_.front();
}

std::optional<ThermalFrame> FrameStore::latest() const {
  std::shared_lock lock(mutex_);
  if (frames_.empty()) return std::nullopt;
  return frames_.back();
}

std::optional<ThermalFrame> FrameStore::at_or_before(double at) const {
  std::shared_lock lock(mutex_);
  const auto it = std::upper_bound(frames_.begin(), frames_.end(), at,
                                   [](double t, const ThermalFrame& f) { return t < f.t; });
  if (it == frames_.begin()) return std::nullopt;
  return *std::prev(it);
}

std::size_t FrameStore::size() const {
  std::shared_lock lock(mutex_);
  return frames_.size();
}

Supervisor::Supervisor(BuildingModel model, std::vector<SensorPlacement> placements, double poll_period,
                       std::optional<std::filesystem::path> store_file)
    : model_(std::move(model)),
      placements_(std::move(placements)),
      poll_period_(poll_period),
      store_(model_.id, std::move(store_file)) {
  if (!(poll_period_ > 0.0)) throw Error(Errc::invalid_argument, "poll period must be > 0");
  for (const auto& p : placements_) {
    const Room& room = model_.room(p.room_id);
    if (!room.aabb.contains(p.position, 1e-9)) {
      throw Error(Errc::invariant_violation, "sensor '" + p.sensor_id + "' lies outside room '" + p.room_id + "'");
    }
    if (!by_sensor_.emplace(p.sensor_id, &p).second) {
      throw Error(Errc::invariant_violation, "duplicate sensor id '" + p.sensor_id + "'");
    }
    ++room_roster_size_[p.room_id];
  }
  if (const auto last = store_.latest()) last_sealed_ = last->t;
}

void Supervisor::note(std::string message) { log_.push_back(std::move(message)); }

std::vector<std::string> Supervisor::log() const {
  std::lock_guard lock(ingest_mutex_);
  return log_;
}

IngestResult Supervisor::ingest(const RoomReading& reading) {
  std::lock_guard lock(ingest_mutex_);
  if (!room_roster_size_.contains(reading.room_id)) {
    note("rejected reading from unregistered room '" + reading.room_id + "' at t=" + std::to_string(reading.t));
    return IngestResult::unregistered_room;
  }
  if (last_sealed_ && reading.t <= *last_sealed_) {
    note("rejected reading for '" + reading.room_id + "' at t=" + std::to_string(reading.t) + ": frame already sealed");
    return IngestResult::duplicate;
  }
  auto& rooms = pending_[reading.t];
  if (!rooms.emplace(reading.room_id, reading).second) {
    note("rejected duplicate reading for '" + reading.room_id + "' at t=" + std::to_string(reading.t));
    return IngestResult::duplicate;
  }
  now_ = std::max(now_, reading.t);
  try_seal(false);
  return IngestResult::accepted;
}

void Supervisor::advance(double now) {
  std::lock_guard lock(ingest_mutex_);
  now_ = std::max(now_, now);
  try_seal(false);
}

void Supervisor::flush() {
  std::lock_guard lock(ingest_mutex_);
  try_seal(true);
}

void Supervisor::try_seal(bool force) {
  while (!pending_.empty()) {
    const auto it = pending_.begin();
    const bool complete = it->second.size() == room_roster_size_.size();
    const bool expired = now_ >= it->first + grace_window();
    if (!(force || complete || expired)) break;
    seal(it->first, it->second);
    pending_.erase(it);
  }
}

void Supervisor::seal(double t, const std::map<std::string, RoomReading>& rooms) {
  ThermalFrame frame;
  frame.building_id = model_.id;
  frame.t = t;
  for (const auto& [room_id, reading] : rooms) {
    for (const auto& s : reading.samples) {
      const auto it = by_sensor_.find(s.sensor_id);
      if (it == by_sensor_.end() || it->second->room_id != room_id) {
        note("dropped sample from unknown sensor '" + s.sensor_id + "' in room '" + room_id + "'");
        continue;
      }
      frame.samples[s.sensor_id] = {room_id, it->second->position, s.temp, s.rh};
    }
  }
  frame.completeness =
      placements_.empty() ? 0.0 : static_cast<double>(frame.samples.size()) / static_cast<double>(placements_.size());
  if (rooms.size() < room_roster_size_.size()) {
    note("sealed frame t=" + std::to_string(t) + " with " + std::to_string(rooms.size()) + "/" +
         std::to_string(room_roster_size_.size()) + " rooms");
  }
  store_.append(frame);
  last_sealed_ = t;
}

std::size_t Supervisor::collect(LevelBus& bus, const std::vector<std::string>& room_ids) {
  std::size_t accepted = 0;
  for (const auto& room_id : room_ids) {
    const PropertyResponse r = bus.read_property({room_id, "latest_cycle", {}});
    if (!r.ok()) continue;
    if (ingest(room_reading_from_json(r.payload)) == IngestResult::accepted) ++accepted;
  }
  return accepted;
}

void Supervisor::check_building(std::string_view building) const {
  if (building != model_.id) throw Error(Errc::unknown_building, "unknown building '" + std::string(building) + "'");
}

std::vector<ThermalFrame> Supervisor::query_range(std::string_view building, double t0, double t1) const {
  check_building(building);
  if (t0 > t1) throw Error(Errc::invalid_argument, "query range needs t0 <= t1");
  return store_.range(t0, t1);
}

PlaybackPlan Supervisor::playback(std::string_view building, double t0, double t1, double speed) const {
  if (!(speed > 0.0)) throw Error(Errc::invalid_argument, "playback speed must be > 0");
  const auto frames = query_range(building, t0, t1);
  if (frames.empty()) throw Error(Errc::empty_range, "no frames in the requested playback range");
  PlaybackPlan plan{model_.id, t0, t1, speed, {}, {}};
  for (const auto& f : frames) {
    plan.frame_times.push_back(f.t);
    plan.presentation_times.push_back((f.t - t0) / speed);
  }
  return plan;
}

ThermalFrame Supervisor::live_frame(std::string_view building) const {
  check_building(building);
  auto latest = store_.latest();
  if (!latest) throw Error(Errc::no_frames, "building '" + model_.id + "' has no sealed frames");
  return *std::move(latest);
}

std::optional<ThermalFrame> Supervisor::frame_at(std::string_view building, double t) const {
  check_building(building);
  return store_.at_or_before(t);
}

}  // namespace thermomap
