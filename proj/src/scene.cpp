#include "thermomap/scene.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <map>
#include <set>

#include "thermomap/error.hpp"

namespace thermomap {

namespace {

constexpr std::array<Primitive, 4> kLadder{Primitive::sphere, Primitive::box, Primitive::tetrahedron,
                                           Primitive::billboard};
constexpr double kBeamWidth = 0.05;
constexpr double kRoomWallTransparency = 0.85;
constexpr double kEnvelopeTransparency = 0.9;

std::string vec3_attr(const Vec3& v) {
  return format_number(v.x) + " " + format_number(v.y) + " " + format_number(v.z);
}

std::string rgb_attr(const Rgb& c) {
  return format_number(c.r) + " " + format_number(c.g) + " " + format_number(c.b);
}

std::string def_name(std::string_view prefix, std::string_view id, std::set<std::string>& used) {
  std::string name(prefix);
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    name.push_back(ok ? c : '_');
  }
  std::string unique = name;
  for (int n = 2; used.contains(unique); ++n) unique = name + "_" + std::to_string(n);
  used.insert(unique);
  return unique;
}

X3DNode material(const Rgb& color, double transparency) {
  X3DNode m{"Material", {}, {}};
  m.attr("diffuseColor", rgb_attr(color)).attr("transparency", format_number(transparency));
  return m;
}

X3DNode shape(X3DNode geometry, const Rgb& color, double transparency) {
  X3DNode appearance{"Appearance", {}, {}};
  appearance.add(material(color, transparency));
  X3DNode s{"Shape", {}, {}};
  s.add(std::move(appearance)).add(std::move(geometry));
  return s;
}

X3DNode face_set(const std::vector<Vec3>& points, std::string index) {
  std::string pts;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) pts += ", ";
    pts += vec3_attr(points[i]);
  }
  X3DNode coord{"Coordinate", {{"point", std::move(pts)}}, {}};
  X3DNode ifs{"IndexedFaceSet", {{"solid", "false"}, {"coordIndex", std::move(index)}}, {}};
  ifs.add(std::move(coord));
  return ifs;
}

X3DNode box_geometry(const Vec3& size) { return X3DNode{"Box", {{"size", vec3_attr(size)}}, {}}; }

X3DNode translated(const Vec3& at, X3DNode child) {
  X3DNode t{"Transform", {{"translation", vec3_attr(at)}}, {}};
  t.add(std::move(child));
  return t;
}

X3DNode cell_node(Primitive primitive, const Vec3& center, double spacing, const Rgb& color, double transparency) {
  const double r = spacing / 2.0;
  switch (primitive) {
    case Primitive::sphere:
      return translated(center, shape(X3DNode{"Sphere", {{"radius", format_number(r)}}, {}}, color, transparency));
    case Primitive::box:
      return translated(center, shape(box_geometry({spacing, spacing, spacing}), color, transparency));
    case Primitive::tetrahedron: {
      const double a = r / std::sqrt(3.0);
      return translated(center, shape(face_set({{a, a, a}, {a, -a, -a}, {-a, a, -a}, {-a, -a, a}},
                                               "0 1 2 -1 0 3 1 -1 0 2 3 -1 1 3 2 -1"),
                                      color, transparency));
    }
    case Primitive::billboard: {
      X3DNode billboard{"Billboard", {{"axisOfRotation", "0 0 0"}}, {}};
      billboard.add(shape(face_set({{-r, -r, 0}, {r, -r, 0}, {r, r, 0}, {-r, r, 0}}, "0 1 2 -1 0 2 3 -1"), color,
                          transparency));
      return translated(center, std::move(billboard));
    }
  }
  return {};
}

// Six quads over the box corners; corner i has bit 0 = x, bit 1 = y, bit 2 = z.
X3DNode flat_walls(const Aabb& box, const Rgb& color, double transparency) {
  std::vector<Vec3> corners;
  for (int i = 0; i < 8; ++i) {
    corners.push_back({(i & 1) ? box.max.x : box.min.x, (i & 2) ? box.max.y : box.min.y,
                       (i & 4) ? box.max.z : box.min.z});
  }
  return shape(face_set(corners, "0 1 3 2 -1 4 5 7 6 -1 0 1 5 4 -1 2 3 7 6 -1 0 2 6 4 -1 1 3 7 5 -1"), color,
               transparency);
}

// Twelve thin beams along the box edges.
std::vector<X3DNode> wire_beams(const Aabb& box, const Rgb& color) {
  std::vector<X3DNode> beams;
  const Vec3 e = box.extent();
  const Vec3 c = box.center();
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    for (int k = 0; k < 4; ++k) {
      Vec3 at = c;
      at[u] = (k & 1) ? box.max[u] : box.min[u];
      at[v] = (k & 2) ? box.max[v] : box.min[v];
      Vec3 size{kBeamWidth, kBeamWidth, kBeamWidth};
      size[axis] = e[axis];
      beams.push_back(translated(at, shape(box_geometry(size), color, 0.0)));
    }
  }
  return beams;
}

std::size_t wall_polygons(WallMode mode) { return mode == WallMode::flat_translucent ? 6 : 12 * 12; }

X3DNode walls_node(const std::string& def, const Aabb& box, WallMode mode, const Rgb& color, double transparency) {
  X3DNode group{"Transform", {{"DEF", def}}, {}};
  if (mode == WallMode::flat_translucent) {
    group.add(flat_walls(box, color, transparency));
  } else {
    for (auto& beam : wire_beams(box, color)) group.add(std::move(beam));
  }
  return group;
}

// Rotation taking the default view direction (0,0,-1) onto `dir`.
std::string orientation_towards(const Vec3& dir) {
  const double n = norm(dir);
  if (!(n > 0.0)) return "0 0 1 0";
  const Vec3 d = dir * (1.0 / n);
  const Vec3 axis{d.y, -d.x, 0.0};
  const double s = norm(axis);
  if (s < 1e-12) return d.z < 0 ? "0 0 1 0" : "1 0 0 " + format_number(M_PI);
  const double angle = std::acos(std::clamp(-d.z, -1.0, 1.0));
  return vec3_attr(axis * (1.0 / s)) + " " + format_number(angle);
}

double layer_value(const FieldValue& v, Layer layer) { return layer == Layer::temperature ? v.temp : v.rh; }

struct RoomPlan {
  const Room* room;
  enum { full, aggregate, none } detail;
};

X3DDocument build_scene(const ThermalFrame& frame, const BuildingModel& model, const SceneOptions& opts,
                        bool view_dependent) {
  opts.validate();
  if (frame.building_id != model.id) {
    throw Error(Errc::mismatch, "frame of building '" + frame.building_id + "' rendered against model '" + model.id +
                                    "'");
  }
  if (view_dependent && !opts.viewpoint) {
    throw Error(Errc::invalid_argument, "view-dependent scene needs a viewpoint");
  }

  std::map<std::string, std::vector<PositionedSample>> by_room;
  for (const auto& [sensor_id, s] : frame.samples) {
    const Room* room = model.find_room(s.room_id);
    if (!room) throw Error(Errc::mismatch, "sensor '" + sensor_id + "' reports unknown room '" + s.room_id + "'");
    if (!room->aabb.contains(s.position, 1e-6)) {
      throw Error(Errc::mismatch, "sensor '" + sensor_id + "' lies outside room '" + s.room_id + "'");
    }
    by_room[s.room_id].push_back({s.position, {s.temp, s.rh}});
  }
  if (by_room.empty()) throw Error(Errc::invalid_argument, "frame at t=" + format_number(frame.t) + " has no samples");
  const BuildingField field(model, by_room, opts.reconstruction);

  X3DDocument doc;
  doc.layer = opts.layer;
  doc.color_map = opts.color_map();
  X3DNode& scene = doc.scene();
  std::set<std::string> used;

  const Vec3 env_center = model.envelope.center();
  const Vec3 env_extent = model.envelope.extent();
  const double diagonal = norm(env_extent);
  scene.add(X3DNode{"NavigationInfo", {{"type", "\"EXAMINE\" \"ANY\""}}, {}});
  {
    X3DNode vp{"Viewpoint", {{"description", opts.viewpoint ? "requested" : "overview"}}, {}};
    const Vec3 position = opts.viewpoint ? *opts.viewpoint
                                         : Vec3{env_center.x, model.envelope.min.y - 1.5 * diagonal, env_center.z};
    vp.attr("position", vec3_attr(position))
        .attr("orientation", orientation_towards(env_center - position))
        .attr("centerOfRotation", vec3_attr(env_center));
    scene.add(std::move(vp));
  }

  const double transparency =
      opts.viewpoint ? alpha_for_distance(model.envelope.distance_to(*opts.viewpoint), opts.ramp) : opts.ramp.t_near;

  // Whole-building maps fade with the envelope distance, region-of-interest
  // maps with each room's own distance.
  const auto room_alpha = [&](const Room& room) {
    return view_dependent ? alpha_for_distance(room.aabb.distance_to(*opts.viewpoint), opts.ramp) : transparency;
  };

  const Rgb envelope_color{0.6, 0.6, 0.6};
  const Rgb wall_color{0.8, 0.8, 0.8};
  scene.add(walls_node("ENVELOPE", model.envelope, opts.walls, envelope_color, kEnvelopeTransparency));
  doc.structure_polygons += wall_polygons(opts.walls);

  std::vector<RoomPlan> plans;
  for (const Room* room : model.rooms()) {
    RoomPlan plan{room, RoomPlan::full};
    if (view_dependent) {
      const double d = room->aabb.distance_to(*opts.viewpoint);
      if (d > opts.mid_radius) {
        plan.detail = RoomPlan::none;
      } else if (d > opts.detail_radius) {
        plan.detail = RoomPlan::aggregate;
      }
    }
    plans.push_back(plan);
  }

  for (const auto& plan : plans) {
    if (plan.detail == RoomPlan::none) continue;
    scene.add(walls_node(def_name("W_", plan.room->id, used), plan.room->aabb, opts.walls, wall_color,
                         kRoomWallTransparency));
    doc.structure_polygons += wall_polygons(opts.walls);
  }

  if (opts.fog) {
    double sum = 0.0;
    for (const auto& [id, s] : frame.samples) sum += opts.layer == Layer::temperature ? s.temp : s.rh;
    const Rgb color = opts.fog->color.value_or(color_for(sum / static_cast<double>(frame.samples.size()),
                                                         doc.color_map));
    const double range = opts.fog->visibility_range > 0.0 ? opts.fog->visibility_range : diagonal;
    scene.add(X3DNode{"Fog",
                      {{"color", rgb_attr(color)},
                       {"fogType", opts.fog->type == FogType::linear ? "LINEAR" : "EXPONENTIAL"},
                       {"visibilityRange", format_number(range)}},
                      {}});
    doc.primitive = opts.primitive;
    doc.notes.push_back("fog presentation: thermal cells omitted");
    return doc;
  }

  // Evaluate cells first so the polygon budget can pick the primitive.
  struct RoomCells {
    const Room* room;
    std::vector<SceneCell> cells;
  };
  std::vector<RoomCells> full_rooms;
  std::size_t cell_count = 0;
  for (const auto& plan : plans) {
    if (plan.detail == RoomPlan::none) continue;
    const CellGrid grid = room_cell_grid(*plan.room, opts.cell_spacing);
    std::vector<SceneCell> cells;
    cells.reserve(grid.size());
    for (const Vec3& c : grid.centers) {
      const double v = layer_value(field.evaluate(c), opts.layer);
      cells.push_back({plan.room->id, c, v, color_for(v, doc.color_map)});
    }
    if (plan.detail == RoomPlan::full) {
      cell_count += cells.size();
      full_rooms.push_back({plan.room, std::move(cells)});
    } else {
      double sum = 0.0;
      for (const auto& c : cells) sum += c.value;
      const double mean = sum / static_cast<double>(cells.size());
      doc.aggregates.push_back({plan.room->id, mean, color_for(mean, doc.color_map)});
    }
  }

  const std::size_t aggregate_polygons = doc.aggregates.size() * nominal_polycount(Primitive::box);
  std::size_t rung = 0;
  while (kLadder[rung] != opts.primitive) ++rung;
  while (opts.max_polygons > 0 && rung + 1 < kLadder.size() &&
         cell_count * nominal_polycount(kLadder[rung]) + aggregate_polygons > opts.max_polygons) {
    doc.notes.push_back("polygon budget " + std::to_string(opts.max_polygons) + " exceeded by " +
                        std::string(to_string(kLadder[rung])) + " (" +
                        std::to_string(cell_count * nominal_polycount(kLadder[rung]) + aggregate_polygons) +
                        "); downgraded to " + std::string(to_string(kLadder[rung + 1])));
    ++rung;
  }
  doc.primitive = kLadder[rung];
  doc.nominal_polygons = cell_count * nominal_polycount(doc.primitive) + aggregate_polygons;
  if (opts.max_polygons > 0 && doc.nominal_polygons > opts.max_polygons) {
    doc.notes.push_back("polygon budget " + std::to_string(opts.max_polygons) + " still exceeded at " +
                        std::to_string(doc.nominal_polygons));
  }

  for (auto& rc : full_rooms) {
    X3DNode group{"Transform", {{"DEF", def_name("T_", rc.room->id, used)}}, {}};
    const double alpha = room_alpha(*rc.room);
    for (const auto& c : rc.cells) group.add(cell_node(doc.primitive, c.center, opts.cell_spacing, c.color, alpha));
    scene.add(std::move(group));
    for (auto& c : rc.cells) doc.cells.push_back(std::move(c));
  }
  for (const auto& agg : doc.aggregates) {
    const Room& room = model.room(agg.room_id);
    X3DNode t{"Transform", {{"DEF", def_name("A_", room.id, used)}, {"translation", vec3_attr(room.aabb.center())}},
              {}};
    t.add(shape(box_geometry(room.aabb.extent()), agg.color, room_alpha(room)));
    scene.add(std::move(t));
  }
  return doc;
}

void write_node(std::string& out, const X3DNode& node, int depth) {
  out.append(static_cast<std::size_t>(depth) * 2, ' ');
  out += '<';
  out += node.name;
  for (const auto& [key, value] : node.attributes) {
    out += ' ';
    out += key;
    out += "=\"";
    for (char c : value) {
      switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
      }
    }
    out += '"';
  }
  if (node.children.empty()) {
    out += "/>\n";
    return;
  }
  out += ">\n";
  for (const auto& child : node.children) write_node(out, child, depth + 1);
  out.append(static_cast<std::size_t>(depth) * 2, ' ');
  out += "</";
  out += node.name;
  out += ">\n";
}

}  // namespace

std::string_view to_string(Primitive primitive) noexcept {
  switch (primitive) {
    case Primitive::sphere: return "sphere";
    case Primitive::box: return "box";
    case Primitive::tetrahedron: return "tetrahedron";
    case Primitive::billboard: return "billboard";
  }
  return "sphere";
}

Primitive parse_primitive(std::string_view text) {
  if (text == "sphere") return Primitive::sphere;
  if (text == "box") return Primitive::box;
  if (text == "tetrahedron" || text == "tetra") return Primitive::tetrahedron;
  if (text == "billboard") return Primitive::billboard;
  throw Error(Errc::invalid_argument, "unknown primitive '" + std::string(text) + "'");
}

std::string_view to_string(Layer layer) noexcept {
  return layer == Layer::temperature ? "temperature" : "humidity";
}

Layer parse_layer(std::string_view text) {
  if (text == "temperature") return Layer::temperature;
  if (text == "humidity") return Layer::humidity;
  throw Error(Errc::invalid_argument, "unknown layer '" + std::string(text) + "'");
}

std::string_view to_string(WallMode mode) noexcept {
  return mode == WallMode::flat_translucent ? "flat" : "wireframe";
}

WallMode parse_wall_mode(std::string_view text) {
  if (text == "flat" || text == "flat_translucent") return WallMode::flat_translucent;
  if (text == "wireframe") return WallMode::wireframe;
  throw Error(Errc::invalid_argument, "unknown wall mode '" + std::string(text) + "'");
}

void SceneOptions::validate() const {
  if (!(cell_spacing > 0.0)) throw Error(Errc::invalid_argument, "cell spacing must be > 0");
  temperature_map.validate();
  humidity_map.validate();
  const bool both_unbounded = std::isinf(detail_radius) && std::isinf(mid_radius);
  if (!(detail_radius >= 0.0) || !(detail_radius < mid_radius || both_unbounded)) {
    throw Error(Errc::invalid_argument, "scene needs 0 <= detail_radius < mid_radius");
  }
  if (viewpoint && !(std::isfinite(viewpoint->x) && std::isfinite(viewpoint->y) && std::isfinite(viewpoint->z))) {
    throw Error(Errc::invalid_argument, "viewpoint must be finite");
  }
}

std::size_t nominal_polycount(Primitive primitive) noexcept {
  switch (primitive) {
    case Primitive::sphere: return 300;
    case Primitive::box: return 12;
    case Primitive::tetrahedron: return 4;
    case Primitive::billboard: return 2;
  }
  return 0;
}

std::size_t nominal_polycount(std::string_view primitive) { return nominal_polycount(parse_primitive(primitive)); }

X3DNode& X3DNode::attr(std::string key, std::string value) {
  attributes.emplace_back(std::move(key), std::move(value));
  return *this;
}

X3DNode& X3DNode::add(X3DNode child) {
  children.push_back(std::move(child));
  return *this;
}

const std::vector<std::string>& x3d_node_set() {
  static const std::vector<std::string> names{"X3D",      "Scene",          "Viewpoint",  "Transform", "Shape",
                                              "Appearance", "Material",     "Sphere",     "Box",       "IndexedFaceSet",
                                              "Coordinate", "Billboard",    "Fog",        "NavigationInfo"};
  return names;
}

X3DDocument generate_scene(const ThermalFrame& frame, const BuildingModel& model, const SceneOptions& opts) {
  return build_scene(frame, model, opts, false);
}

X3DDocument view_dependent_scene(const ThermalFrame& frame, const BuildingModel& model, const SceneOptions& opts) {
  return build_scene(frame, model, opts, true);
}

std::string serialize_x3d(const X3DNode& root) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  write_node(out, root, 0);
  return out;
}

std::string serialize_x3d(const X3DDocument& doc) { return serialize_x3d(doc.root); }

std::string legend_json(Layer layer, const ColorMap& map) {
  return nlohmann::json{{"layer", to_string(layer)},
                        {"lo", map.lo},
                        {"hi", map.hi},
                        {"units", layer == Layer::temperature ? "degC" : "%RH"}}
      .dump();
}

std::string format_number(double v) {
  if (v == 0.0 || std::fabs(v) < 1e-12) return "0";
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 6);
  if (ec != std::errc{}) throw Error(Errc::invalid_argument, "cannot format number");
  return {buf.data(), end};
}

}  // namespace thermomap
