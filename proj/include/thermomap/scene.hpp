#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "thermomap/building.hpp"
#include "thermomap/field.hpp"
#include "thermomap/supervisor.hpp"

namespace thermomap {

enum class Primitive { sphere, box, tetrahedron, billboard };
std::string_view to_string(Primitive primitive) noexcept;
/// Accepts sphere, box, tetrahedron (or tetra), billboard.
Primitive parse_primitive(std::string_view text);

enum class Layer { temperature, humidity };
std::string_view to_string(Layer layer) noexcept;
Layer parse_layer(std::string_view text);

enum class WallMode { flat_translucent, wireframe };
std::string_view to_string(WallMode mode) noexcept;
/// Accepts flat, flat_translucent, wireframe.
WallMode parse_wall_mode(std::string_view text);

enum class FogType { linear, exponential };

struct FogOptions {
  FogType type = FogType::linear;
  std::optional<Rgb> color;       // default: color of the building mean value
  double visibility_range = 0.0;  // 0 means the envelope diagonal
};

struct SceneOptions {
  Primitive primitive = Primitive::sphere;
  Layer layer = Layer::temperature;
  WallMode walls = WallMode::flat_translucent;
  double cell_spacing = 1.0;
  ColorMap temperature_map = kDefaultTemperatureMap;
  ColorMap humidity_map = kDefaultHumidityMap;
  TransparencyRamp ramp;
  std::optional<FogOptions> fog;
  std::optional<Vec3> viewpoint;
  double detail_radius = 20.0;
  double mid_radius = 60.0;
  std::size_t max_polygons = 150000;  // 0 disables the budget
  ReconstructionChoice reconstruction = ReconstructionChoice::automatic;

  const ColorMap& color_map() const { return layer == Layer::temperature ? temperature_map : humidity_map; }
  void validate() const;
};

/// Nominal polygons per primitive: sphere 300, box 12, tetrahedron 4, billboard 2.
std::size_t nominal_polycount(Primitive primitive) noexcept;
std::size_t nominal_polycount(std::string_view primitive);

struct X3DNode {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<X3DNode> children;

  X3DNode& attr(std::string key, std::string value);
  X3DNode& add(X3DNode child);
  friend bool operator==(const X3DNode&, const X3DNode&) = default;
};

/// Node names a generated document may contain.
const std::vector<std::string>& x3d_node_set();

struct SceneCell {
  std::string room_id;
  Vec3 center;
  double value = 0.0;
  Rgb color;
};

struct RoomAggregate {
  std::string room_id;
  double value = 0.0;
  Rgb color;
};

struct X3DDocument {
  X3DNode root{"X3D", {{"profile", "Interchange"}, {"version", "3.3"}}, {X3DNode{"Scene", {}, {}}}};
  Layer layer = Layer::temperature;
  ColorMap color_map;
  Primitive primitive = Primitive::sphere;  // after any budget downgrade
  std::size_t nominal_polygons = 0;         // thermal primitives only
  std::size_t structure_polygons = 0;       // walls and envelope
  std::vector<SceneCell> cells;
  std::vector<RoomAggregate> aggregates;
  std::vector<std::string> notes;

  X3DNode& scene() { return root.children.front(); }
  const X3DNode& scene() const { return root.children.front(); }
  std::size_t thermal_shapes() const { return cells.size() + aggregates.size(); }
};

/// Full thermal map: every room filled with tangent primitives at cell_spacing.
/// Cell transparency follows the envelope's distance to the viewpoint.
X3DDocument generate_scene(const ThermalFrame& frame, const BuildingModel& model, const SceneOptions& opts);

/// Region-of-interest map around opts.viewpoint: full grids for rooms within
/// detail_radius, one room-sized box within mid_radius, nothing beyond.
/// Transparency follows each room's own distance to the viewpoint.
X3DDocument view_dependent_scene(const ThermalFrame& frame, const BuildingModel& model, const SceneOptions& opts);

/// UTF-8 X3D XML with stable attribute order and two-space indentation.
std::string serialize_x3d(const X3DDocument& doc);
std::string serialize_x3d(const X3DNode& root);

/// Colour legend for a scene: {"layer", "lo", "hi", "units"}.
std::string legend_json(Layer layer, const ColorMap& map);
inline std::string legend_json(const X3DDocument& doc) { return legend_json(doc.layer, doc.color_map); }

/// Number formatting used for every numeric attribute.
std::string format_number(double v);

}  // namespace thermomap
