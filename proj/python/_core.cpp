#include <pybind11/gil_safe_call_once.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>

#include "thermomap/error.hpp"
#include "thermomap/scene.hpp"
#include "thermomap/simulation.hpp"
#include "thermomap/validation.hpp"

namespace py = pybind11;
using namespace thermomap;

namespace {

using Point = std::tuple<double, double, double>;

Vec3 vec(const Point& p) { return {std::get<0>(p), std::get<1>(p), std::get<2>(p)}; }
Point tup(const Vec3& v) { return {v.x, v.y, v.z}; }

py::dict room_dict(const Room& r) {
  py::dict d;
  d["id"] = r.id;
  d["level"] = r.level;
  d["min"] = tup(r.aabb.min);
  d["max"] = tup(r.aabb.max);
  d["kind"] = std::string(to_string(r.kind));
  return d;
}

py::dict frame_dict(const ThermalFrame& f) {
  py::dict samples;
  for (const auto& [id, s] : f.samples) {
    py::dict d;
    d["room_id"] = s.room_id;
    d["position"] = tup(s.position);
    d["temp"] = s.temp;
    d["rh"] = s.rh;
    samples[py::str(id)] = d;
  }
  py::dict d;
  d["building_id"] = f.building_id;
  d["t"] = f.t;
  d["completeness"] = f.completeness;
  d["samples"] = samples;
  return d;
}

SceneOptions scene_options(SceneOptions o, const std::string& primitive, const std::string& layer,
                           const std::string& walls, std::optional<double> spacing, std::optional<Point> viewpoint,
                           std::optional<double> detail, std::optional<double> mid, std::optional<std::size_t> budget) {
  if (!primitive.empty()) o.primitive = parse_primitive(primitive);
  if (!layer.empty()) o.layer = parse_layer(layer);
  if (!walls.empty()) o.walls = parse_wall_mode(walls);
  if (spacing) o.cell_spacing = *spacing;
  if (viewpoint) o.viewpoint = vec(*viewpoint);
  if (detail) o.detail_radius = *detail;
  if (mid) o.mid_radius = *mid;
  if (budget) o.max_polygons = *budget;
  return o;
}

py::dict scene_dict(const X3DDocument& doc) {
  py::dict d;
  d["x3d"] = serialize_x3d(doc);
  d["legend"] = legend_json(doc);
  d["primitive"] = std::string(to_string(doc.primitive));
  d["nominal_polygons"] = doc.nominal_polygons;
  d["thermal_shapes"] = doc.thermal_shapes();
  d["notes"] = doc.notes;
  py::list cells;
  for (const auto& c : doc.cells) {
    py::dict cd;
    cd["room_id"] = c.room_id;
    cd["center"] = tup(c.center);
    cd["value"] = c.value;
    cd["color"] = std::make_tuple(c.color.r, c.color.g, c.color.b);
    cells.append(cd);
  }
  d["cells"] = cells;
  return d;
}

X3DDocument render(const ThermalFrame& frame, const BuildingModel& model, const SceneOptions& o) {
  return o.viewpoint ? view_dependent_scene(frame, model, o) : generate_scene(frame, model, o);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Building thermal mapping: acquisition simulation, reconstruction and X3D scenes";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&m]() { return py::exception<Error>(m, "ThermomapError", PyExc_RuntimeError); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::tuple args = py::make_tuple(std::string(to_string(e.code())), std::string(e.what()));
      PyErr_SetObject(error_type.get_stored().ptr(), args.ptr());
    }
  });

  py::class_<BuildingModel>(m, "Building")
      .def_property_readonly("id", [](const BuildingModel& b) { return b.id; })
      .def_property_readonly("room_count", &BuildingModel::room_count)
      .def_property_readonly("envelope",
                             [](const BuildingModel& b) { return std::make_pair(tup(b.envelope.min), tup(b.envelope.max)); })
      .def_property_readonly("rooms",
                             [](const BuildingModel& b) {
                               py::list out;
                               for (const Room* r : b.rooms()) out.append(room_dict(*r));
                               return out;
                             })
      .def("to_json", &serialize_building);

  m.def("load_building", &load_building, py::arg("config_text"));

  m.def(
      "place_sensors",
      [](const BuildingModel& b, const std::string& strategy) {
        py::list out;
        for (const auto& p : place_building(b, parse_placement_strategy(strategy))) {
          py::dict d;
          d["sensor_id"] = p.sensor_id;
          d["room_id"] = p.room_id;
          d["position"] = tup(p.position);
          out.append(d);
        }
        return out;
      },
      py::arg("building"), py::arg("strategy") = "corners8");

  py::class_<FieldScenario>(m, "Scenario")
      .def_property_readonly("name", [](const FieldScenario& s) { return s.name; })
      .def_property_readonly("hotspot_centers", [](const FieldScenario& s) {
        std::vector<Point> out;
        for (const auto& h : s.hotspots) out.push_back(tup(h.center));
        return out;
      });

  m.def("load_scenario", &load_scenario, py::arg("config_text"), py::arg("building"));
  m.def("scenario_preset", &scenario_preset, py::arg("name"), py::arg("building"));
  m.def(
      "ground_truth",
      [](const FieldScenario& s, const Point& p, double t) {
        const FieldValue v = ground_truth(s, vec(p), t);
        return std::make_pair(v.temp, v.rh);
      },
      py::arg("scenario"), py::arg("point"), py::arg("t") = 0.0);

  m.def(
      "reconstruct",
      [](const std::vector<std::tuple<double, double, double, double, double>>& samples,
         const std::vector<Point>& points, const std::string& method) {
        std::vector<PositionedSample> ps;
        for (const auto& [x, y, z, temp, rh] : samples) ps.push_back({{x, y, z}, {temp, rh}});
        const ReconstructionField f = method == "linear_grid"   ? ReconstructionField::linear_grid(ps)
                                      : method == "bell_kernel" ? ReconstructionField::bell_kernel(ps)
                                      : method == "automatic"
                                          ? ReconstructionField::automatic(ps)
                                          : throw Error(Errc::invalid_argument, "unknown method '" + method + "'");
        std::vector<std::pair<double, double>> out;
        for (const auto& p : points) {
          const FieldValue v = f.reconstruct(vec(p));
          out.emplace_back(v.temp, v.rh);
        }
        return out;
      },
      py::arg("samples"), py::arg("points"), py::arg("method") = "automatic");

  m.def(
      "encode_sample",
      [](double temp, double rh) {
        const EncodedSample e = encode_sample(temp, rh);
        return std::make_tuple(e.temp_raw, e.rh_raw, e.saturated);
      },
      py::arg("temp"), py::arg("rh"));
  m.def(
      "decode_sample",
      [](std::uint16_t t, std::uint16_t h) {
        const FieldValue v = decode_sample(t, h);
        return std::make_pair(v.temp, v.rh);
      },
      py::arg("temp_raw"), py::arg("rh_raw"));

  m.def("nominal_polycount", py::overload_cast<std::string_view>(&nominal_polycount), py::arg("primitive"));

  m.def(
      "simulate",
      [](const std::string& config_text, const std::filesystem::path& out_dir, double duration, double cadence,
         std::uint64_t seed, const std::string& strategy, const std::string& primitive, double loss, bool noise) {
        RunConfig cfg;
        cfg.config_text = config_text;
        cfg.out_dir = out_dir;
        cfg.duration = duration;
        cfg.cadence = cadence;
        cfg.seed = seed;
        cfg.strategy = parse_placement_strategy(strategy);
        cfg.scene.primitive = parse_primitive(primitive);
        cfg.link.loss_probability = loss;
        if (!noise) cfg.noise = {0.0, 0.0};
        RunArtifacts art;
        {
          py::gil_scoped_release release;
          art = run_simulation(cfg);
        }
        py::dict d;
        d["building_id"] = art.building_id;
        d["frames"] = art.frames;
        d["polls"] = art.polls;
        d["missing_samples"] = art.missing_samples;
        d["manifest"] = art.manifest_path;
        d["store"] = art.store_path;
        py::dict files;
        for (const auto& f : art.files) files[py::str(f.path)] = f.sha256;
        d["files"] = files;
        d["notes"] = art.notes;
        return d;
      },
      py::arg("config_text"), py::arg("out_dir"), py::arg("duration") = 60.0, py::arg("cadence") = 1.0,
      py::arg("seed") = 0, py::arg("strategy") = "corners8", py::arg("primitive") = "sphere", py::arg("loss") = 0.0,
      py::arg("noise") = true);

  py::class_<Archive, std::shared_ptr<Archive>>(m, "Archive")
      .def_property_readonly("building", [](const Archive& a) { return a.model; })
      .def_property_readonly("building_id", [](const Archive& a) { return a.model.id; })
      .def_property_readonly("cadence", [](const Archive& a) { return a.cadence; })
      .def("__len__", [](const Archive& a) { return a.supervisor->store().size(); })
      .def(
          "frames",
          [](const Archive& a, double t0, double t1) {
            py::list out;
            for (const auto& f : a.supervisor->query_range(a.model.id, t0, t1)) out.append(frame_dict(f));
            return out;
          },
          py::arg("t0") = -1e300, py::arg("t1") = 1e300)
      .def(
          "playback",
          [](const Archive& a, double t0, double t1, double speed) {
            const PlaybackPlan p = a.supervisor->playback(a.model.id, t0, t1, speed);
            return std::make_pair(p.frame_times, p.presentation_times);
          },
          py::arg("t0"), py::arg("t1"), py::arg("speed") = 1.0)
      .def(
          "scene",
          [](const Archive& a, std::optional<double> t, const std::string& primitive, const std::string& layer,
             const std::string& walls, std::optional<double> spacing, std::optional<Point> viewpoint,
             std::optional<double> detail, std::optional<double> mid, std::optional<std::size_t> max_polygons) {
            const auto frame = t ? a.supervisor->frame_at(a.model.id, *t) : a.supervisor->live_frame(a.model.id);
            if (!frame) throw Error(Errc::no_frames, "no frame at or before the requested time");
            const SceneOptions o =
                scene_options(a.scene_defaults, primitive, layer, walls, spacing, viewpoint, detail, mid, max_polygons);
            return scene_dict(render(*frame, a.model, o));
          },
          py::arg("t") = py::none(), py::arg("primitive") = "", py::arg("layer") = "", py::arg("walls") = "",
          py::arg("spacing") = py::none(), py::arg("viewpoint") = py::none(), py::arg("detail") = py::none(),
          py::arg("mid") = py::none(), py::arg("max_polygons") = py::none());

  m.def(
      "open_archive", [](const std::filesystem::path& dir) { return std::make_shared<Archive>(open_archive(dir)); },
      py::arg("dir"));

  m.def(
      "truth_scene",
      [](const std::string& config_text, const std::string& strategy, double t, const std::string& primitive,
         const std::string& layer, const std::string& walls, std::optional<double> spacing,
         std::optional<Point> viewpoint, std::optional<double> detail, std::optional<double> mid,
         std::optional<std::size_t> max_polygons) {
        const BuildingModel model = load_building(config_text);
        const FieldScenario scenario = load_scenario(config_text, model);
        ThermalFrame frame{model.id, t, {}, 1.0};
        for (const auto& p : place_building(model, parse_placement_strategy(strategy))) {
          const FieldValue v = ground_truth(scenario, p.position, t);
          frame.samples[p.sensor_id] = {p.room_id, p.position, v.temp, v.rh};
        }
        const SceneOptions o =
            scene_options({}, primitive, layer, walls, spacing, viewpoint, detail, mid, max_polygons);
        return scene_dict(render(frame, model, o));
      },
      py::arg("config_text"), py::arg("strategy") = "corners8", py::arg("t") = 0.0, py::arg("primitive") = "",
      py::arg("layer") = "", py::arg("walls") = "", py::arg("spacing") = py::none(), py::arg("viewpoint") = py::none(),
      py::arg("detail") = py::none(), py::arg("mid") = py::none(), py::arg("max_polygons") = py::none());

  m.def(
      "validate",
      [](const std::string& config_text, const std::string& plane, int width, int height, const std::string& strategy,
         double t) {
        const BuildingModel model = load_building(config_text);
        const FieldScenario scenario = load_scenario(config_text, model);
        ValidationOptions o;
        o.plane = Plane::parse(plane);
        o.width = width;
        o.height = height;
        o.strategy = parse_placement_strategy(strategy);
        o.t = t;
        const ValidationResult r = run_validation(model, scenario, o);
        return validation_report_json(r, o, model.id, scenario.name);
      },
      py::arg("config_text"), py::arg("plane") = "z=1.5", py::arg("width") = 128, py::arg("height") = 128,
      py::arg("strategy") = "corners8", py::arg("t") = 0.0);

  m.def("sha256_hex", [](const py::bytes& b) { return sha256_hex(std::string(b)); }, py::arg("data"));
}
