#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "thermomap/building.hpp"
#include "thermomap/concentrator.hpp"

namespace thermomap {

struct FrameSample {
  std::string room_id;
  Vec3 position;
  double temp = 0.0;
  double rh = 0.0;
  friend bool operator==(const FrameSample&, const FrameSample&) = default;
};

/// Building-wide snapshot at one instant.
struct ThermalFrame {
  std::string building_id;
  double t = 0.0;
  std::map<std::string, FrameSample> samples;  // by sensor id
  double completeness = 0.0;                   // fraction of the roster present
  friend bool operator==(const ThermalFrame&, const ThermalFrame&) = default;
};

std::string frame_to_json(const ThermalFrame& frame);
ThermalFrame frame_from_json(std::string_view text);

/// Append-only log of frames for one building, optionally backed by a file
/// of length-prefixed JSON records ([4B length BE][JSON]). The in-memory index
/// is rebuilt from the file on construction. Readers only see whole frames.
class FrameStore {
 public:
  explicit FrameStore(std::string building_id, std::optional<std::filesystem::path> file = std::nullopt);

  FrameStore(const FrameStore&) = delete;
  FrameStore& operator=(const FrameStore&) = delete;

  /// Timestamps must strictly increase.
  void append(const ThermalFrame& frame);

  /// Frames with t in [t0, t1], ordered by t.
  std::vector<ThermalFrame> range(double t0, double t1) const;
  std::optional<ThermalFrame> earliest() const;
  std::optional<ThermalFrame> latest() const;
  /// Latest frame with t <= at.
  std::optional<ThermalFrame> at_or_before(double at) const;
  std::size_t size() const;
  const std::string& building_id() const { return building_id_; }
  const std::optional<std::filesystem::path>& file() const { return file_; }

 private:
  std::string building_id_;
  std::optional<std::filesystem::path> file_;
  std::ofstream out_;
  mutable std::shared_mutex mutex_;
  std::vector<ThermalFrame> frames_;
};

/// Presentation schedule for replaying stored frames at `speed` times real time.
struct PlaybackPlan {
  std::string building_id;
  double t0 = 0.0;
  double t1 = 0.0;
  double speed = 1.0;
  std::vector<double> frame_times;
  std::vector<double> presentation_times;  // (frame_time - t0) / speed
};

enum class IngestResult { accepted, unregistered_room, duplicate };

/// Tier-3 collector: merges room readings into frames, persists them and
/// serves range, playback and live queries.
///
/// A pending frame is sealed once every registered room has reported, or
/// once a reading at least one grace window (2 x poll period) newer arrives.
/// Pending frames seal in timestamp order.
class Supervisor {
 public:
  Supervisor(BuildingModel model, std::vector<SensorPlacement> placements, double poll_period,
             std::optional<std::filesystem::path> store_file = std::nullopt);

  Supervisor(const Supervisor&) = delete;
  Supervisor& operator=(const Supervisor&) = delete;

  IngestResult ingest(const RoomReading& reading);
  /// Seals pending frames whose grace window has lapsed at virtual time now.
  void advance(double now);
  /// Seals everything pending regardless of completeness.
  void flush();

  /// Reads latest_cycle from each room over the bus and ingests it.
  /// Returns the number of accepted readings.
  std::size_t collect(LevelBus& bus, const std::vector<std::string>& room_ids);

  std::vector<ThermalFrame> query_range(std::string_view building, double t0, double t1) const;
  PlaybackPlan playback(std::string_view building, double t0, double t1, double speed) const;
  ThermalFrame live_frame(std::string_view building) const;
  std::optional<ThermalFrame> frame_at(std::string_view building, double t) const;

  const std::string& building_id() const { return model_.id; }
  const BuildingModel& model() const { return model_; }
  const std::vector<SensorPlacement>& placements() const { return placements_; }
  const FrameStore& store() const { return store_; }
  double poll_period() const { return poll_period_; }
  double grace_window() const { return 2.0 * poll_period_; }
  std::vector<std::string> log() const;

 private:
  void check_building(std::string_view building) const;
  void try_seal(bool force);
  void seal(double t, const std::map<std::string, RoomReading>& rooms);
  void note(std::string message);

  BuildingModel model_;
  std::vector<SensorPlacement> placements_;
  std::map<std::string, const SensorPlacement*, std::less<>> by_sensor_;
  std::map<std::string, std::size_t, std::less<>> room_roster_size_;
  double poll_period_;
  FrameStore store_;

  mutable std::mutex ingest_mutex_;
  std::map<double, std::map<std::string, RoomReading>> pending_;
  std::optional<double> last_sealed_;
  double now_ = 0.0;
  std::vector<std::string> log_;
};

}  // namespace thermomap
