#include "cli.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "thermomap/error.hpp"
#include "thermomap/service.hpp"
#include "thermomap/simulation.hpp"
#include "thermomap/validation.hpp"

namespace thermomap {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::invalid_argument, "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

Vec3 parse_point(const std::string& text) {
  Vec3 v;
  std::istringstream ss(text);
  char c1 = 0;
  char c2 = 0;
  if (!(ss >> v.x >> c1 >> v.y >> c2 >> v.z) || c1 != ',' || c2 != ',' || !ss.eof()) {
    throw Error(Errc::invalid_argument, "viewpoint must be x,y,z, got '" + text + "'");
  }
  return v;
}

std::pair<int, int> parse_resolution(const std::string& text) {
  int w = 0;
  int h = 0;
  char x = 0;
  std::istringstream ss(text);
  if (!(ss >> w >> x >> h) || (x != 'x' && x != 'X') || !ss.eof()) {
    throw Error(Errc::invalid_argument, "resolution must be WxH, got '" + text + "'");
  }
  return {w, h};
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Building thermal map simulator and X3D scene service", "thermomap"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string store_dir;
  std::string strategy = "corners8";
  std::string primitive = "sphere";
  std::string layer = "temperature";
  std::string walls = "flat";
  std::string viewpoint;
  std::string building;
  std::string plane = "z=1.5";
  std::string resolution = "256x256";
  double duration = 60.0;
  double cadence = 1.0;
  double spacing = 1.0;
  double loss = 0.0;
  double latency = 0.0;
  double speed = 1.0;
  double t = 0.0;
  std::uint64_t seed = 0;
  int port = 8080;
  std::string host = "127.0.0.1";
  bool no_noise = false;
  bool latest_live = false;
  std::size_t max_polygons = 150000;

  auto* simulate = app.add_subcommand("simulate", "Run a virtual-clock acquisition and write an archive");
  simulate->add_option("--config", config_path, "Building config (JSON)")->required();
  simulate->add_option("--duration", duration, "Virtual seconds to simulate");
  simulate->add_option("--cadence", cadence, "Poll period in seconds");
  simulate->add_option("--seed", seed, "Seed for noise, phases and link loss");
  simulate->add_option("--out", out_path, "Output directory")->required();
  simulate->add_option("--strategy", strategy, "corners8 | faces14 | dense16");
  simulate->add_option("--primitive", primitive, "sphere | box | tetra | billboard");
  simulate->add_option("--layer", layer, "temperature | humidity");
  simulate->add_option("--walls", walls, "flat | wireframe");
  simulate->add_option("--spacing", spacing, "Cell spacing in meters");
  simulate->add_option("--max-polygons", max_polygons, "Scene polygon budget (0 disables)");
  simulate->add_option("--loss", loss, "Per-frame link loss probability");
  simulate->add_option("--latency", latency, "One-way link latency in seconds");
  simulate->add_flag("--no-noise", no_noise, "Disable sensor noise");

  auto* serve = app.add_subcommand("serve", "Serve archives over HTTP");
  serve->add_option("--store", store_dir, "Archive directory")->required();
  serve->add_option("--port", port, "TCP port (0 picks one)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--speed", speed, "Live replay speed in virtual seconds per wall second");
  serve->add_flag("--latest", latest_live, "Live view shows the latest frame instead of replaying");

  auto* export_scene = app.add_subcommand("export-scene", "Write the X3D scene of one stored frame");
  export_scene->add_option("--store", store_dir, "Archive directory")->required();
  export_scene->add_option("--building", building, "Building id (needed when the store holds several)");
  auto* t_opt = export_scene->add_option("--t", t, "Frame time; latest frame at or before t");
  export_scene->add_option("--viewpoint", viewpoint, "x,y,z for a view-dependent scene");
  export_scene->add_option("--primitive", primitive, "sphere | box | tetra | billboard");
  export_scene->add_option("--layer", layer, "temperature | humidity");
  export_scene->add_option("--walls", walls, "flat | wireframe");
  export_scene->add_option("--out", out_path, "Output .x3d file")->required();

  auto* validate = app.add_subcommand("validate", "Compare reconstructed and true cross-sections");
  validate->add_option("--config", config_path, "Building config (JSON)")->required();
  validate->add_option("--plane", plane, "Section plane, e.g. z=1.5");
  validate->add_option("--res", resolution, "Raster resolution WxH");
  validate->add_option("--strategy", strategy, "corners8 | faces14 | dense16");
  validate->add_option("--t", t, "Scenario time in seconds");
  validate->add_option("--out", out_path, "Report JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*simulate) {
      RunConfig cfg;
      cfg.config_text = read_config(config_path);
      cfg.duration = duration;
      cfg.cadence = cadence;
      cfg.seed = seed;
      cfg.strategy = parse_placement_strategy(strategy);
      cfg.scene.primitive = parse_primitive(primitive);
      cfg.scene.layer = parse_layer(layer);
      cfg.scene.walls = parse_wall_mode(walls);
      cfg.scene.cell_spacing = spacing;
      cfg.scene.max_polygons = max_polygons;
      cfg.link = {latency, loss};
      if (no_noise) cfg.noise = {0.0, 0.0};
      cfg.out_dir = out_path;
      const RunArtifacts art = run_simulation(cfg);
      out << "building " << art.building_id << ": " << art.frames << " frames, " << art.polls << " polls, "
          << art.missing_samples << " missing samples\n";
      for (const auto& f : art.files) out << "  " << f.sha256 << "  " << f.path << "\n";
      for (const auto& n : art.notes) out << "note: " << n << "\n";
      out << "manifest: " << art.manifest_path.string() << "\n";
      return kExitOk;
    }
    if (*serve) {
      ServiceOptions so;
      if (!latest_live) so.live_speed = speed;
      Service service(open_store(store_dir), so);
      out << "serving";
      for (const auto& id : service.building_ids()) out << " " << id;
      out << " on " << host << ":" << port << std::endl;
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service.listen(host, port);
      g_service = nullptr;
      return kExitOk;
    }
    if (*export_scene) {
      std::vector<Archive> archives = open_store(store_dir);
      if (archives.empty()) throw Error(Errc::invalid_argument, "no archives under " + store_dir);
      const Archive* a = nullptr;
      for (const auto& candidate : archives) {
        if (building.empty() ? archives.size() == 1 : candidate.model.id == building) a = &candidate;
      }
      if (!a) {
        throw Error(building.empty() ? Errc::invalid_argument : Errc::unknown_building,
                    building.empty() ? "store holds several buildings; pass --building" : "unknown building '" +
                                                                                              building + "'");
      }
      const auto frame = t_opt->count() ? a->supervisor->frame_at(a->model.id, t)
                                        : std::optional(a->supervisor->live_frame(a->model.id));
      if (!frame) throw Error(Errc::no_frames, "no frame at or before t=" + std::to_string(t));
      SceneOptions opts = a->scene_defaults;
      opts.primitive = parse_primitive(primitive);
      opts.layer = parse_layer(layer);
      opts.walls = parse_wall_mode(walls);
      X3DDocument doc;
      if (!viewpoint.empty()) {
        opts.viewpoint = parse_point(viewpoint);
        doc = view_dependent_scene(*frame, a->model, opts);
      } else {
        doc = generate_scene(*frame, a->model, opts);
      }
      const std::filesystem::path path(out_path);
      write_text(path, serialize_x3d(doc));
      std::filesystem::path legend = path;
      legend.replace_extension(".legend.json");
      write_text(legend, legend_json(doc));
      out << "frame t=" << frame->t << ": " << doc.thermal_shapes() << " thermal shapes, " << doc.nominal_polygons
          << " nominal polygons (" << to_string(doc.primitive) << ")\n";
      for (const auto& n : doc.notes) out << "note: " << n << "\n";
      return kExitOk;
    }
    if (*validate) {
      const std::string text = read_config(config_path);
      const BuildingModel model = load_building(text);
      const FieldScenario scenario = load_scenario(text, model);
      ValidationOptions vo;
      vo.plane = Plane::parse(plane);
      std::tie(vo.width, vo.height) = parse_resolution(resolution);
      vo.strategy = parse_placement_strategy(strategy);
      vo.t = t;
      const ValidationResult result = run_validation(model, scenario, vo);
      const std::filesystem::path report(out_path);
      write_text(report, validation_report_json(result, vo, model.id, scenario.name) + "\n");
      const double lo = std::min(result.truth.min_value(), result.reconstructed.min_value());
      double hi = std::max(result.truth.max_value(), result.reconstructed.max_value());
      if (!(hi > lo)) hi = lo + 1.0;
      for (const auto& [name, raster] :
           {std::pair<std::string, const CrossSectionRaster*>{"truth", &result.truth},
            std::pair<std::string, const CrossSectionRaster*>{"reconstructed", &result.reconstructed}}) {
        std::filesystem::path base = report;
        base.replace_extension("");
        write_text(base.string() + "." + name + ".pgm", to_pgm16(*raster, lo, hi));
        write_text(base.string() + "." + name + ".json", raster_metadata_json(*raster, lo, hi, "degC") + "\n");
      }
      out << "rms " << result.report.rms_error << ", max " << result.report.max_abs_error << ", hotspot offset "
          << result.report.hotspot_offset << " m: " << (result.report.pass ? "pass" : "fail") << "\n";
      for (const auto& c : result.convergence) out << "  spacing " << c.spacing << ": rms " << c.rms_error << "\n";
      out << "convergence " << (result.convergence_monotone ? "monotone" : "not monotone") << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_config_error(e.code()) ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace thermomap
