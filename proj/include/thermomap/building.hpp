#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "thermomap/geometry.hpp"

namespace thermomap {

enum class RoomKind { bedroom, bathroom, other };

std::string_view to_string(RoomKind kind) noexcept;
RoomKind parse_room_kind(std::string_view text);

struct Room {
  std::string id;
  int level = 0;
  Aabb aabb;
  RoomKind kind = RoomKind::other;

  double volume() const { return aabb.volume(); }
  friend bool operator==(const Room&, const Room&) = default;
};

struct Level {
  int index = 0;
  std::vector<Room> rooms;
  friend bool operator==(const Level&, const Level&) = default;
};

/// Building geometry: levels of axis-aligned rooms inside an envelope.
/// Immutable after load.
struct BuildingModel {
  std::string id;
  std::vector<Level> levels;
  Aabb envelope;

  const Room* find_room(std::string_view room_id) const;
  const Room& room(std::string_view room_id) const;  // throws unknown_room
  std::vector<const Room*> rooms() const;
  std::size_t room_count() const;

  friend bool operator==(const BuildingModel&, const BuildingModel&) = default;
};

/// Parses the "building" section of a config document and validates it.
/// Parse failures report line/column; invariant failures name the room.
BuildingModel load_building(std::string_view config_text);

/// Emits a config document that load_building reads back unchanged.
std::string serialize_building(const BuildingModel& model);

/// Throws invariant_violation when the model breaks any structural rule.
void validate_building(const BuildingModel& model);

enum class PlacementStrategy { corners8, faces14, dense16 };

std::string_view to_string(PlacementStrategy strategy) noexcept;
/// Accepts corners8, faces14 (alias corners_plus_face_centers14), dense16.
PlacementStrategy parse_placement_strategy(std::string_view text);

struct SensorPlacement {
  std::string sensor_id;
  std::string room_id;
  Vec3 position;
  friend bool operator==(const SensorPlacement&, const SensorPlacement&) = default;
};

/// Raw placement points for a box, sorted by (z, y, x).
std::vector<Vec3> placement_points(const Aabb& box, PlacementStrategy strategy);

/// Sensor ids are "<room_id>.s<k>" with k counting from 1 in (z, y, x) order.
std::vector<SensorPlacement> place_sensors(const Room& room, PlacementStrategy strategy);

/// Rectangular sensor lattice covering the room, boundary included: nodes at
/// min + k * spacing on every axis plus the far wall. Lattices at spacing s
/// and s / 2 are nested.
std::vector<SensorPlacement> place_lattice(const Room& room, double spacing);

std::vector<SensorPlacement> place_building(const BuildingModel& model, PlacementStrategy strategy);

struct CellGrid {
  std::array<int, 3> counts{};
  double spacing = 0.0;
  std::vector<Vec3> centers;  // x fastest, then y, then z

  double radius() const { return spacing / 2.0; }
  std::size_t size() const { return centers.size(); }
};

/// Centered regular grid of tangent cells; floor(extent / spacing) per axis.
CellGrid room_cell_grid(const Room& room, double spacing);

}  // namespace thermomap
