#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "thermomap/error.hpp"
#include "thermomap/scene.hpp"

using namespace thermomap;

namespace {

BuildingModel room_model(const std::string& max) {
  return load_building(R"({"building": {"id": "b", "levels": [{"index": 0, "rooms": [
      {"id": "r", "min": [0,0,0], "max": )" + max + "}]}]}}");
}

SceneOptions unlimited(Primitive p) {
  SceneOptions o;
  o.primitive = p;
  o.max_polygons = 0;
  return o;
}

std::size_t geometry_count(const oracle::XmlNode& root, Primitive p) {
  switch (p) {
    case Primitive::sphere: return oracle::count_named(root, "Sphere");
    case Primitive::billboard: return oracle::count_named(root, "Billboard");
    default: break;
  }
  return 0;
}

}  // namespace

TEST_CASE("nominal polycounts") {
  CHECK(nominal_polycount(Primitive::sphere) == 300);
  CHECK(nominal_polycount(Primitive::box) == 12);
  CHECK(nominal_polycount(Primitive::tetrahedron) == 4);
  CHECK(nominal_polycount(Primitive::billboard) == 2);
  CHECK(nominal_polycount("tetra") == 4);
  CHECK_THROWS_AS(nominal_polycount("cone"), Error);
}

TEST_CASE("a 4x4x3 room at 1 m yields 48 cells and the primitive's polygon total") {
  const BuildingModel m = room_model("[4,4,3]");
  const ThermalFrame f = fixtures::uniform_frame(m, 22.0, 50.0);
  const std::pair<Primitive, std::size_t> expected[] = {
      {Primitive::sphere, 14400}, {Primitive::box, 576}, {Primitive::tetrahedron, 192}, {Primitive::billboard, 96}};
  for (const auto& [p, polys] : expected) {
    const X3DDocument doc = generate_scene(f, m, unlimited(p));
    CHECK(doc.cells.size() == 48);
    CHECK(doc.primitive == p);
    CHECK(doc.nominal_polygons == polys);
    CHECK(doc.nominal_polygons == doc.cells.size() * nominal_polycount(p));
    const auto xml = oracle::parse_xml(serialize_x3d(doc));
    if (p == Primitive::sphere || p == Primitive::billboard) CHECK(geometry_count(xml, p) == 48);
  }
}

TEST_CASE("uniform 20 degC maps every cell to (0.25, 0, 0.75)") {
  const BuildingModel m = room_model("[4,4,3]");
  const X3DDocument doc = generate_scene(fixtures::uniform_frame(m, 20.0, 50.0), m, unlimited(Primitive::box));
  REQUIRE(doc.cells.size() == 48);
  for (const auto& c : doc.cells) {
    CHECK(c.value == doctest::Approx(20.0));
    CHECK(c.color.r == doctest::Approx(0.25));
    CHECK(c.color.g == doctest::Approx(0.0));
    CHECK(c.color.b == doctest::Approx(0.75));
  }
  const std::string xml = serialize_x3d(doc);
  CHECK(xml.find("diffuseColor=\"0.25 0 0.75\"") != std::string::npos);
}

TEST_CASE("a 1 m room gives one sphere of radius 0.5 at its center") {
  const BuildingModel m = room_model("[1,1,1]");
  const X3DDocument doc = generate_scene(fixtures::uniform_frame(m, 25.0, 50.0), m, unlimited(Primitive::sphere));
  REQUIRE(doc.cells.size() == 1);
  CHECK(doc.cells[0].center == Vec3{0.5, 0.5, 0.5});
  const auto xml = oracle::parse_xml(serialize_x3d(doc));
  CHECK(oracle::count_named(xml, "Sphere") == 1);
  const std::string text = serialize_x3d(doc);
  CHECK(text.find("<Sphere radius=\"0.5\"/>") != std::string::npos);
  CHECK(text.find("translation=\"0.5 0.5 0.5\"") != std::string::npos);
}

TEST_CASE("a frame without samples cannot be rendered") {
  const BuildingModel m = room_model("[4,4,3]");
  try {
    generate_scene(ThermalFrame{"b", 0, {}, 0}, m, {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_argument);
  }
}

TEST_CASE("a frame from another building or outside its room is a mismatch") {
  const BuildingModel m = room_model("[4,4,3]");
  ThermalFrame f = fixtures::uniform_frame(m, 20, 50);
  f.building_id = "other";
  CHECK_THROWS_AS(generate_scene(f, m, {}), Error);
  ThermalFrame g = fixtures::uniform_frame(m, 20, 50);
  g.samples.begin()->second.position = {9, 9, 9};
  try {
    generate_scene(g, m, {});
    FAIL("expected mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::mismatch);
  }
}

TEST_CASE("serialized X3D parses back to the same node tree using only allowed nodes") {
  const BuildingModel m = load_building(fixtures::config("residential.json"));
  const ThermalFrame f = fixtures::truth_frame(m, load_scenario(fixtures::config("residential.json"), m),
                                               place_building(m, PlacementStrategy::corners8), 0);
  const std::set<std::string> allowed(x3d_node_set().begin(), x3d_node_set().end());
  for (auto p : {Primitive::sphere, Primitive::box, Primitive::tetrahedron, Primitive::billboard}) {
    for (auto w : {WallMode::flat_translucent, WallMode::wireframe}) {
      SceneOptions o = unlimited(p);
      o.walls = w;
      const X3DDocument doc = generate_scene(f, m, o);
      const auto parsed = oracle::parse_xml(serialize_x3d(doc));
      std::function<bool(const oracle::XmlNode&, const X3DNode&)> same = [&](const oracle::XmlNode& a,
                                                                               const X3DNode& b) {
        if (a.name != b.name || a.attributes != b.attributes || a.children.size() != b.children.size()) return false;
        for (std::size_t i = 0; i < a.children.size(); ++i) {
          if (!same(a.children[i], b.children[i])) return false;
        }
        return true;
      };
      CHECK(same(parsed, doc.root));
      std::set<std::string> names;
      oracle::collect_names(parsed, names);
      CHECK(std::includes(allowed.begin(), allowed.end(), names.begin(), names.end()));
      CHECK(parsed.name == "X3D");
      CHECK(parsed.children.front().name == "Scene");
    }
  }
}

TEST_CASE("attribute values are escaped") {
  X3DNode n{"X3D", {{"a", "<&\">"}}, {}};
  const auto parsed = oracle::parse_xml(serialize_x3d(n));
  CHECK(parsed.attributes.front().second == "<&\">");
}

TEST_CASE("generation is deterministic") {
  const BuildingModel m = load_building(fixtures::config("residential.json"));
  const ThermalFrame f = fixtures::truth_frame(m, load_scenario(fixtures::config("residential.json"), m),
                                               place_building(m, PlacementStrategy::faces14), 300);
  SceneOptions o;
  o.viewpoint = Vec3{-3, -4, 2};
  const std::string a = serialize_x3d(generate_scene(f, m, o));
  const std::string b = serialize_x3d(generate_scene(f, m, o));
  CHECK(a == b);
  CHECK(serialize_x3d(view_dependent_scene(f, m, o)) == serialize_x3d(view_dependent_scene(f, m, o)));
}

TEST_CASE("thermal shape count is the sum of cell counts over rooms") {
  const BuildingModel m = load_building(fixtures::config("residential.json"));
  const ThermalFrame f = fixtures::uniform_frame(m, 21, 45);
  for (double s : {1.0, 0.5}) {
    SceneOptions o = unlimited(Primitive::sphere);
    o.cell_spacing = s;
    const X3DDocument doc = generate_scene(f, m, o);
    std::size_t expected = 0;
    for (const Room* r : m.rooms()) {
      const Vec3 e = r->aabb.extent();
      expected += static_cast<std::size_t>(oracle::cells_along(e.x, s) * oracle::cells_along(e.y, s) *
                                           oracle::cells_along(e.z, s));
    }
    CHECK(doc.cells.size() == expected);
    CHECK(oracle::count_named(oracle::parse_xml(serialize_x3d(doc)), "Sphere") == expected);
  }
}

TEST_CASE("wall modes") {
  const BuildingModel m = room_model("[4,4,3]");
  const ThermalFrame f = fixtures::uniform_frame(m, 20, 50);
  SceneOptions flat = unlimited(Primitive::box);
  const auto flat_doc = generate_scene(f, m, flat);
  CHECK(flat_doc.structure_polygons == 2 * 6);
  CHECK(oracle::count_named(oracle::parse_xml(serialize_x3d(flat_doc)), "IndexedFaceSet") == 2);
  SceneOptions wire = flat;
  wire.walls = WallMode::wireframe;
  const auto wire_doc = generate_scene(f, m, wire);
  CHECK(oracle::count_named(oracle::parse_xml(serialize_x3d(wire_doc)), "IndexedFaceSet") == 0);
  CHECK(oracle::count_named(oracle::parse_xml(serialize_x3d(wire_doc)), "Box") == 48 + 2 * 12);
  CHECK(parse_wall_mode("flat") == WallMode::flat_translucent);
  CHECK_THROWS_AS(parse_wall_mode("glass"), Error);
}

TEST_CASE("fog replaces the thermal cells") {
  const BuildingModel m = room_model("[4,4,3]");
  SceneOptions o;
  o.fog = FogOptions{};
  const X3DDocument doc = generate_scene(fixtures::uniform_frame(m, 35, 50), m, o);
  CHECK(doc.cells.empty());
  const auto xml = oracle::parse_xml(serialize_x3d(doc));
  REQUIRE(oracle::count_named(xml, "Fog") == 1);
  CHECK(oracle::count_named(xml, "Sphere") == 0);
  CHECK(serialize_x3d(doc).find("color=\"1 0 0\"") != std::string::npos);
  CHECK_FALSE(doc.notes.empty());
}

TEST_CASE("the polygon budget steps down the primitive ladder") {
  const BuildingModel m = room_model("[4,4,3]");
  const ThermalFrame f = fixtures::uniform_frame(m, 20, 50);
  SceneOptions o;
  o.max_polygons = 1000;
  const X3DDocument doc = generate_scene(f, m, o);
  CHECK(doc.primitive == Primitive::box);
  CHECK(doc.nominal_polygons == 576);
  CHECK(doc.notes.size() == 1);
  o.max_polygons = 100;
  const X3DDocument tight = generate_scene(f, m, o);
  CHECK(tight.primitive == Primitive::billboard);
  CHECK(tight.nominal_polygons == 96);
  o.max_polygons = 50;
  const X3DDocument over = generate_scene(f, m, o);
  CHECK(over.primitive == Primitive::billboard);
  CHECK(over.notes.back().find("still exceeded") != std::string::npos);
}

TEST_CASE("view-dependent maps on the six level building") {
  const BuildingModel m = load_building(fixtures::config("commercial.json"));
  const ThermalFrame f = fixtures::truth_frame(m, load_scenario(fixtures::config("commercial.json"), m),
                                               place_building(m, PlacementStrategy::corners8), 0);
  SceneOptions full = unlimited(Primitive::sphere);
  const X3DDocument everything = generate_scene(f, m, full);
  REQUIRE(everything.cells.size() == 1152);

  SUBCASE("a viewpoint beyond mid radius shows nothing thermal") {
    SceneOptions o = full;
    o.viewpoint = Vec3{100 + m.envelope.max.x, 0, 0};
    const auto doc = view_dependent_scene(f, m, o);
    CHECK(doc.thermal_shapes() == 0);
    CHECK(doc.nominal_polygons == 0);
  }
  SUBCASE("unbounded radii reproduce the full map") {
    SceneOptions o = full;
    o.viewpoint = Vec3{-0.6, -0.8, 0};
    o.detail_radius = std::numeric_limits<double>::infinity();
    o.mid_radius = std::numeric_limits<double>::infinity();
    const auto vd = view_dependent_scene(f, m, o);
    const auto all = generate_scene(f, m, o);
    CHECK(vd.nominal_polygons == all.nominal_polygons);
    REQUIRE(vd.cells.size() == all.cells.size());
    for (std::size_t i = 0; i < vd.cells.size(); ++i) {
      CHECK(vd.cells[i].room_id == all.cells[i].room_id);
      CHECK(vd.cells[i].center == all.cells[i].center);
      CHECK(vd.cells[i].value == all.cells[i].value);
    }
  }
  SUBCASE("nearer rooms are drawn more opaque") {
    SceneOptions o = full;
    o.viewpoint = Vec3{-0.6, -0.8, 0};
    o.detail_radius = std::numeric_limits<double>::infinity();
    o.mid_radius = std::numeric_limits<double>::infinity();
    const auto xml = oracle::parse_xml(serialize_x3d(view_dependent_scene(f, m, o)));
    std::map<std::string, double> alpha;
    std::function<void(const oracle::XmlNode&, const std::string&)> walk = [&](const oracle::XmlNode& n,
                                                                             const std::string& room) {
      std::string here = room;
      for (const auto& [k, v] : n.attributes) {
        if (k == "DEF" && v.rfind("T_", 0) == 0) here = v.substr(2);
        if (k == "transparency" && !here.empty()) alpha[here] = std::stod(v);
      }
      for (const auto& c : n.children) walk(c, here);
    };
    walk(xml, "");
    REQUIRE(alpha.size() == 24);
    CHECK(alpha.at("L0_r00") == doctest::Approx(alpha_for_distance(1.0)));
    CHECK(alpha.at("L0_r00") < alpha.at("L5_r11"));
  }
  SUBCASE("shrinking the detail radius never adds polygons") {
    SceneOptions o = full;
    o.viewpoint = Vec3{-0.6, -0.8, 0};
    std::size_t previous = std::numeric_limits<std::size_t>::max();
    for (double r : {60.0, 20.0, 10.0, 6.0, 3.0, 1.0, 0.0}) {
      o.detail_radius = r;
      o.mid_radius = 80.0;
      const auto doc = view_dependent_scene(f, m, o);
      CHECK(doc.nominal_polygons <= previous);
      previous = doc.nominal_polygons;
    }
  }
  SUBCASE("a viewpoint at one corner keeps under a quarter of the full polygons") {
    SceneOptions o = full;
    o.viewpoint = Vec3{-0.6, -0.8, 0};
    o.detail_radius = 3.0;
    const auto doc = view_dependent_scene(f, m, o);
    CHECK(doc.nominal_polygons > 0);
    CHECK(static_cast<double>(doc.nominal_polygons) <= 0.25 * static_cast<double>(everything.nominal_polygons));
  }
  SUBCASE("a viewpoint is required") {
    CHECK_THROWS_AS(view_dependent_scene(f, m, full), Error);
  }
}

TEST_CASE("the hottest cell of the overheated corner lies in bed_nw") {
  const std::string cfg = fixtures::config("residential.json");
  const BuildingModel m = load_building(cfg);
  const ThermalFrame f =
      fixtures::truth_frame(m, load_scenario(cfg, m), place_building(m, PlacementStrategy::corners8), 0);
  const X3DDocument doc = generate_scene(f, m, unlimited(Primitive::box));
  const auto hottest =
      std::max_element(doc.cells.begin(), doc.cells.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
  REQUIRE(hottest != doc.cells.end());
  CHECK(hottest->room_id == "bed_nw");
  const auto reddest = std::max_element(doc.cells.begin(), doc.cells.end(), [](const auto& a, const auto& b) {
    return a.color.r - a.color.b < b.color.r - b.color.b;
  });
  CHECK(reddest->room_id == "bed_nw");
}

TEST_CASE("legend and number formatting") {
  CHECK(legend_json(Layer::temperature, kDefaultTemperatureMap) ==
        R"({"hi":35.0,"layer":"temperature","lo":15.0,"units":"degC"})");
  CHECK(legend_json(Layer::humidity, kDefaultHumidityMap).find("%RH") != std::string::npos);
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(1.0 / 3.0) == "0.333333");
  CHECK(format_number(12.0) == "12");
}

TEST_CASE("scene options are validated") {
  SceneOptions o;
  o.cell_spacing = 0;
  CHECK_THROWS_AS(o.validate(), Error);
  o = {};
  o.detail_radius = 70;
  CHECK_THROWS_AS(o.validate(), Error);
  o = {};
  o.viewpoint = Vec3{NAN, 0, 0};
  CHECK_THROWS_AS(o.validate(), Error);
  CHECK(parse_primitive("tetra") == Primitive::tetrahedron);
  CHECK(parse_layer("humidity") == Layer::humidity);
}
