#include "thermomap/building.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json_util.hpp"
#include "thermomap/error.hpp"

namespace thermomap {

using detail::json;

namespace {

// Tolerance for floor/ceil on extent/spacing ratios that are integral in exact arithmetic.
constexpr double kRatioEps = 1e-9;

std::string describe(const Vec3& v) {
  return "(" + std::to_string(v.x) + ", " + std::to_string(v.y) + ", " + std::to_string(v.z) + ")";
}

}  // namespace

std::string_view to_string(RoomKind kind) noexcept {
  switch (kind) {
    case RoomKind::bedroom: return "bedroom";
    case RoomKind::bathroom: return "bathroom";
    case RoomKind::other: return "other";
  }
  return "other";
}

RoomKind parse_room_kind(std::string_view text) {
  if (text == "bedroom") return RoomKind::bedroom;
  if (text == "bathroom") return RoomKind::bathroom;
  if (text == "other") return RoomKind::other;
  throw Error(Errc::parse_error, "unknown room kind '" + std::string(text) + "'");
}

const Room* BuildingModel::find_room(std::string_view room_id) const {
  for (const auto& level : levels) {
    for (const auto& room : level.rooms) {
      if (room.id == room_id) return &room;
    }
  }
  return nullptr;
}

const Room& BuildingModel::room(std::string_view room_id) const {
  if (const Room* r = find_room(room_id)) return *r;
  throw Error(Errc::unknown_room, "room '" + std::string(room_id) + "' not in building '" + id + "'");
}

std::vector<const Room*> BuildingModel::rooms() const {
  std::vector<const Room*> out;
  for (const auto& level : levels) {
    for (const auto& room : level.rooms) out.push_back(&room);
  }
  return out;
}

std::size_t BuildingModel::room_count() const {
  std::size_t n = 0;
  for (const auto& level : levels) n += level.rooms.size();
  return n;
}

void validate_building(const BuildingModel& model) {
  auto fail = [](const std::string& msg) { throw Error(Errc::invariant_violation, msg); };
  if (model.id.empty()) fail("building id is empty");
  if (model.levels.empty()) fail("building '" + model.id + "' has no levels");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < model.levels.size(); ++i) {
    const Level& level = model.levels[i];
    if (level.index != static_cast<int>(i)) {
      fail("level indices must be contiguous from 0; found " + std::to_string(level.index) + " at position " +
           std::to_string(i));
    }
    for (std::size_t r = 0; r < level.rooms.size(); ++r) {
      const Room& room = level.rooms[r];
      if (room.id.empty()) fail("room at level " + std::to_string(i) + " has an empty id");
      if (!ids.insert(room.id).second) fail("room '" + room.id + "': duplicate room id");
      if (room.level != level.index) fail("room '" + room.id + "': level field does not match its level");
      if (!room.aabb.valid()) {
        fail("room '" + room.id + "': min " + describe(room.aabb.min) + " must be < max " +
             describe(room.aabb.max) + " on every axis");
      }
      if (!model.envelope.contains(room.aabb)) fail("room '" + room.id + "': outside the building envelope");
      for (std::size_t o = 0; o < r; ++o) {
        if (room.aabb.overlaps_interior(level.rooms[o].aabb)) {
          fail("room '" + room.id + "': overlaps room '" + level.rooms[o].id + "' on level " +
               std::to_string(level.index));
        }
      }
    }
  }
}

BuildingModel load_building(std::string_view config_text) {
  const json doc = detail::parse_document(config_text);
  const json& b = detail::require(doc, "building", "");
  BuildingModel model;
  model.id = detail::require_string(b, "id", "building");
  const json& levels = detail::require(b, "levels", "building");
  if (!levels.is_array()) detail::field_error("building.levels", "expected an array");

  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::string lpath = "building.levels[" + std::to_string(i) + "]";
    const json& lj = levels[i];
    Level level;
    const double index = detail::require_number(lj, "index", lpath);
    if (index != std::floor(index)) detail::field_error(lpath + ".index", "expected an integer");
    level.index = static_cast<int>(index);
    const json& rooms = detail::require(lj, "rooms", lpath);
    if (!rooms.is_array()) detail::field_error(lpath + ".rooms", "expected an array");
    for (std::size_t r = 0; r < rooms.size(); ++r) {
      const std::string rpath = lpath + ".rooms[" + std::to_string(r) + "]";
      const json& rj = rooms[r];
      Room room;
      room.id = detail::require_string(rj, "id", rpath);
      room.level = level.index;
      room.aabb = {detail::require_vec3(rj, "min", rpath), detail::require_vec3(rj, "max", rpath)};
      try {
        room.kind = parse_room_kind(detail::string_or(rj, "kind", "other", rpath));
      } catch (const Error&) {
        detail::field_error(rpath + ".kind", "expected bedroom, bathroom or other");
      }
      level.rooms.push_back(std::move(room));
    }
    model.levels.push_back(std::move(level));
  }
  std::stable_sort(model.levels.begin(), model.levels.end(),
                   [](const Level& a, const Level& c) { return a.index < c.index; });

  bool first = true;
  for (const Room* room : model.rooms()) {
    model.envelope = first ? room->aabb : model.envelope.united(room->aabb);
    first = false;
  }
  if (b.contains("envelope")) {
    const json& ej = b["envelope"];
    model.envelope = {detail::require_vec3(ej, "min", "building.envelope"),
                      detail::require_vec3(ej, "max", "building.envelope")};
  }
  validate_building(model);
  return model;
}

std::string serialize_building(const BuildingModel& model) {
  json levels = json::array();
  for (const auto& level : model.levels) {
    json rooms = json::array();
    for (const auto& room : level.rooms) {
      rooms.push_back({{"id", room.id},
                       {"min", detail::to_json(room.aabb.min)},
                       {"max", detail::to_json(room.aabb.max)},
                       {"kind", std::string(to_string(room.kind))}});
    }
    levels.push_back({{"index", level.index}, {"rooms", std::move(rooms)}});
  }
  json doc = {{"building",
               {{"id", model.id},
                {"envelope", {{"min", detail::to_json(model.envelope.min)},
                              {"max", detail::to_json(model.envelope.max)}}},
                {"levels", std::move(levels)}}}};
  return doc.dump(2);
}

std::string_view to_string(PlacementStrategy strategy) noexcept {
  switch (strategy) {
    case PlacementStrategy::corners8: return "corners8";
    case PlacementStrategy::faces14: return "faces14";
    case PlacementStrategy::dense16: return "dense16";
  }
  return "corners8";
}

PlacementStrategy parse_placement_strategy(std::string_view text) {
  if (text == "corners8") return PlacementStrategy::corners8;
  if (text == "faces14" || text == "corners_plus_face_centers14") return PlacementStrategy::faces14;
  if (text == "dense16") return PlacementStrategy::dense16;
  throw Error(Errc::invalid_argument, "unknown placement strategy '" + std::string(text) + "'");
}

std::vector<Vec3> placement_points(const Aabb& box, PlacementStrategy strategy) {
  const Vec3 lo = box.min;
  const Vec3 hi = box.max;
  const Vec3 mid = box.center();
  std::vector<Vec3> pts;
  for (double z : {lo.z, hi.z}) {
    for (double y : {lo.y, hi.y}) {
      for (double x : {lo.x, hi.x}) pts.push_back({x, y, z});
    }
  }
  if (strategy == PlacementStrategy::faces14) {
    pts.push_back({mid.x, mid.y, lo.z});
    pts.push_back({mid.x, mid.y, hi.z});
    pts.push_back({mid.x, lo.y, mid.z});
    pts.push_back({mid.x, hi.y, mid.z});
    pts.push_back({lo.x, mid.y, mid.z});
    pts.push_back({hi.x, mid.y, mid.z});
  } else if (strategy == PlacementStrategy::dense16) {
    // Midpoints of the four floor edges and the four ceiling edges.
    for (double z : {lo.z, hi.z}) {
      pts.push_back({mid.x, lo.y, z});
      pts.push_back({mid.x, hi.y, z});
      pts.push_back({lo.x, mid.y, z});
      pts.push_back({hi.x, mid.y, z});
    }
  }
  std::sort(pts.begin(), pts.end(), zyx_less);
  return pts;
}

namespace {

std::vector<SensorPlacement> label(const Room& room, const std::vector<Vec3>& points) {
  std::vector<SensorPlacement> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.push_back({room.id + ".s" + std::to_string(i + 1), room.id, points[i]});
  }
  return out;
}

}  // namespace

std::vector<SensorPlacement> place_sensors(const Room& room, PlacementStrategy strategy) {
  return label(room, placement_points(room.aabb, strategy));
}

std::vector<SensorPlacement> place_lattice(const Room& room, double spacing) {
  if (!(spacing > 0.0)) throw Error(Errc::invalid_argument, "lattice spacing must be > 0");
  std::array<std::vector<double>, 3> axes;
  for (int a = 0; a < 3; ++a) {
    // Nodes at min + k * spacing plus the far wall, so halving the spacing
    // keeps every coarser node.
    for (int k = 0;; ++k) {
      const double v = room.aabb.min[a] + k * spacing;
      if (v >= room.aabb.max[a] - kRatioEps * spacing) break;
      axes[a].push_back(v);
    }
    axes[a].push_back(room.aabb.max[a]);
  }
  std::vector<Vec3> pts;
  for (double z : axes[2]) {
    for (double y : axes[1]) {
      for (double x : axes[0]) pts.push_back({x, y, z});
    }
  }
  return label(room, pts);
}

std::vector<SensorPlacement> place_building(const BuildingModel& model, PlacementStrategy strategy) {
  std::vector<SensorPlacement> out;
  for (const Room* room : model.rooms()) {
    auto placed = place_sensors(*room, strategy);
    out.insert(out.end(), placed.begin(), placed.end());
  }
  return out;
}

CellGrid room_cell_grid(const Room& room, double spacing) {
  if (!(spacing > 0.0)) throw Error(Errc::invalid_argument, "cell spacing must be > 0");
  if (spacing > room.aabb.min_extent() * (1.0 + kRatioEps)) {
    throw Error(Errc::invalid_argument, "cell spacing " + std::to_string(spacing) +
                                            " exceeds the smallest dimension of room '" + room.id + "'");
  }
  CellGrid grid;
  grid.spacing = spacing;
  const Vec3 extent = room.aabb.extent();
  Vec3 origin;
  for (int a = 0; a < 3; ++a) {
    grid.counts[a] = std::max(1, static_cast<int>(std::floor(extent[a] / spacing + kRatioEps)));
    origin[a] = room.aabb.min[a] + (extent[a] - grid.counts[a] * spacing) / 2.0 + spacing / 2.0;
  }
  grid.centers.reserve(static_cast<std::size_t>(grid.counts[0]) * grid.counts[1] * grid.counts[2]);
  for (int k = 0; k < grid.counts[2]; ++k) {
    for (int j = 0; j < grid.counts[1]; ++j) {
      for (int i = 0; i < grid.counts[0]; ++i) {
        grid.centers.push_back({origin.x + i * spacing, origin.y + j * spacing, origin.z + k * spacing});
      }
    }
  }
  return grid;
}

}  // namespace thermomap
