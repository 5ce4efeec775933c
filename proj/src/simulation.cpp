#include "thermomap/simulation.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "json_util.hpp"
#include "thermomap/concentrator.hpp"
#include "thermomap/error.hpp"

namespace thermomap {

using detail::json;

namespace {

constexpr double kCountEps = 1e-9;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
}

// splitmix64: derives independent per-device seeds from the run seed.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

json scene_options_to_json(const SceneOptions& o) {
  return {{"primitive", to_string(o.primitive)},
          {"layer", to_string(o.layer)},
          {"walls", to_string(o.walls)},
          {"cell_spacing", o.cell_spacing},
          {"temperature_map", {o.temperature_map.lo, o.temperature_map.hi}},
          {"humidity_map", {o.humidity_map.lo, o.humidity_map.hi}},
          {"detail_radius", o.detail_radius},
          {"mid_radius", o.mid_radius},
          {"max_polygons", o.max_polygons}};
}

SceneOptions scene_options_from_json(const json& j) {
  SceneOptions o;
  o.primitive = parse_primitive(detail::string_or(j, "primitive", "sphere", "scene"));
  o.layer = parse_layer(detail::string_or(j, "layer", "temperature", "scene"));
  o.walls = parse_wall_mode(detail::string_or(j, "walls", "flat", "scene"));
  o.cell_spacing = detail::number_or(j, "cell_spacing", 1.0, "scene");
  if (j.contains("temperature_map")) o.temperature_map = {j["temperature_map"][0], j["temperature_map"][1]};
  if (j.contains("humidity_map")) o.humidity_map = {j["humidity_map"][0], j["humidity_map"][1]};
  o.detail_radius = detail::number_or(j, "detail_radius", 20.0, "scene");
  o.mid_radius = detail::number_or(j, "mid_radius", 60.0, "scene");
  o.max_polygons = static_cast<std::size_t>(detail::number_or(j, "max_polygons", 150000, "scene"));
  return o;
}

}  // namespace

void RunConfig::validate() const {
  if (!(cadence > 0.0)) throw Error(Errc::invalid_argument, "cadence must be > 0");
  if (!(duration >= cadence)) throw Error(Errc::invalid_argument, "duration must be >= cadence");
  if (sample_period && !(*sample_period > 0.0)) throw Error(Errc::invalid_argument, "sample period must be > 0");
  if (!(noise.sigma_temp >= 0.0 && noise.sigma_rh >= 0.0)) {
    throw Error(Errc::invalid_argument, "noise sigmas must be >= 0");
  }
  if (!(link.loss_probability >= 0.0 && link.loss_probability <= 1.0) || !(link.latency >= 0.0)) {
    throw Error(Errc::invalid_argument, "link loss must be in [0,1] and latency >= 0");
  }
  if (out_dir.empty()) throw Error(Errc::invalid_argument, "output directory is required");
  scene.validate();
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::io_error, "SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

RunArtifacts run_simulation(const RunConfig& cfg) {
  cfg.validate();
  const BuildingModel model = load_building(cfg.config_text);
  const FieldScenario scenario = load_scenario(cfg.config_text, model);
  const std::vector<SensorPlacement> placements = place_building(model, cfg.strategy);
  const double sample_period = cfg.sample_period.value_or(cfg.cadence);

  std::filesystem::create_directories(cfg.out_dir);
  RunArtifacts art;
  art.out_dir = cfg.out_dir;
  art.building_id = model.id;
  art.store_path = cfg.out_dir / (model.id + ".frames");
  std::filesystem::remove(art.store_path);

  std::map<std::string, std::vector<const SensorPlacement*>> by_room;
  for (const auto& p : placements) by_room[p.room_id].push_back(&p);

  std::mt19937_64 phase_rng(mix(cfg.seed));
  std::uniform_real_distribution<double> phase_dist(0.0, sample_period);
  std::vector<std::unique_ptr<Concentrator>> dcs;
  std::map<int, std::unique_ptr<LevelBus>> buses;
  std::map<int, std::vector<std::string>> rooms_on_level;
  std::uint64_t device = 0;
  for (const Room* room : model.rooms()) {
    const auto& sensors = by_room[room->id];
    if (sensors.size() > 255) throw Error(Errc::invalid_argument, "room '" + room->id + "' has more than 255 sensors");
    auto dc = std::make_unique<Concentrator>(room->id, cfg.cadence, mix(cfg.seed ^ mix(++device)));
    std::uint8_t address = 0;
    for (const SensorPlacement* p : sensors) {
      EndpointConfig ec;
      ec.sensor_id = ++address;
      ec.position = p->position;
      ec.sample_period = sample_period;
      ec.phase = phase_dist(phase_rng);
      ec.noise = cfg.noise;
      ec.noise_seed = mix(cfg.seed + mix(++device));
      const Vec3 pos = p->position;
      dc->add_endpoint(p->sensor_id, ec, [&scenario, pos](double t) { return ground_truth(scenario, pos, t); },
                       cfg.link);
    }
    auto& bus = buses[room->level];
    if (!bus) bus = std::make_unique<LevelBus>(room->level);
    bus->attach(*dc);
    rooms_on_level[room->level].push_back(room->id);
    dcs.push_back(std::move(dc));
  }

  Supervisor supervisor(model, placements, cfg.cadence, art.store_path);
  for (auto& dc : dcs) {
    const std::size_t acked = dc->broadcast_sync(0.0);
    if (acked < dc->roster().size()) {
      art.notes.push_back("room '" + dc->room_id() + "': " + std::to_string(dc->roster().size() - acked) +
                          " end-points missed SYNC");
    }
  }

  const auto cycles = static_cast<std::size_t>(std::floor(cfg.duration / cfg.cadence + kCountEps));
  for (std::size_t k = 1; k <= cycles; ++k) {
    const double t = static_cast<double>(k) * cfg.cadence;
    for (auto& dc : dcs) {
      const RoomReading r = dc->poll_cycle(t);
      art.missing_samples += r.missing.size();
      ++art.polls;
    }
    for (auto& [level, bus] : buses) supervisor.collect(*bus, rooms_on_level[level]);
    supervisor.advance(t);
  }
  supervisor.flush();
  art.frames = supervisor.store().size();
  for (auto& line : supervisor.log()) art.notes.push_back(std::move(line));
  for (const auto& dc : dcs) {
    if (!dc->link().within_budget()) {
      art.notes.push_back("room '" + dc->room_id() + "' link exceeded the bandwidth budget");
    }
  }

  write_file(cfg.out_dir / kConfigCopyName, cfg.config_text);
  std::vector<std::string> outputs{kConfigCopyName, art.store_path.filename().string()};
  if (const auto last = supervisor.store().latest()) {
    const X3DDocument doc = generate_scene(*last, model, cfg.scene);
    write_file(cfg.out_dir / "scene_last.x3d", serialize_x3d(doc));
    write_file(cfg.out_dir / "scene_last.legend.json", legend_json(doc));
    outputs.emplace_back("scene_last.x3d");
    outputs.emplace_back("scene_last.legend.json");
    for (const auto& n : doc.notes) art.notes.push_back("scene: " + n);
  }

  json files = json::array();
  for (const auto& name : outputs) {
    const auto path = cfg.out_dir / name;
    ArtifactFile f{name, sha256_file(path), std::filesystem::file_size(path)};
    files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    art.files.push_back(std::move(f));
  }
  const json manifest{{"building_id", model.id},
                      {"scenario", scenario.name},
                      {"seed", cfg.seed},
                      {"cadence", cfg.cadence},
                      {"duration", cfg.duration},
                      {"sample_period", sample_period},
                      {"strategy", to_string(cfg.strategy)},
                      {"sensors", placements.size()},
                      {"frames", art.frames},
                      {"missing_samples", art.missing_samples},
                      {"config", kConfigCopyName},
                      {"store", art.store_path.filename().string()},
                      {"scene", scene_options_to_json(cfg.scene)},
                      {"files", files},
                      {"notes", art.notes}};
  art.manifest_path = cfg.out_dir / kManifestName;
  write_file(art.manifest_path, manifest.dump(2) + "\n");
  return art;
}

Archive open_archive(const std::filesystem::path& dir) {
  const json manifest = detail::parse_document(read_file(dir / kManifestName));
  const std::string config_name = detail::string_or(manifest, "config", kConfigCopyName, "manifest");
  const std::string config_text = read_file(dir / config_name);
  Archive a;
  a.dir = dir;
  a.model = load_building(config_text);
  a.scenario = load_scenario(config_text, a.model);
  a.strategy = parse_placement_strategy(detail::require_string(manifest, "strategy", "manifest"));
  a.cadence = detail::require_number(manifest, "cadence", "manifest");
  if (manifest.contains("scene")) a.scene_defaults = scene_options_from_json(manifest["scene"]);
  const std::string store = detail::require_string(manifest, "store", "manifest");
  if (detail::require_string(manifest, "building_id", "manifest") != a.model.id) {
    throw Error(Errc::mismatch, "manifest in " + dir.string() + " names a different building than its config");
  }
  a.supervisor = std::make_unique<Supervisor>(a.model, place_building(a.model, a.strategy), a.cadence, dir / store);
  return a;
}

std::vector<Archive> open_store(const std::filesystem::path& store_dir) {
  if (!std::filesystem::is_directory(store_dir)) {
    throw Error(Errc::io_error, "store directory " + store_dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> dirs;
  if (std::filesystem::exists(store_dir / kManifestName)) dirs.push_back(store_dir);
  for (const auto& entry : std::filesystem::directory_iterator(store_dir)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / kManifestName)) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<Archive> out;
  for (const auto& d : dirs) {
    Archive a = open_archive(d);
    for (const auto& existing : out) {
      if (existing.model.id == a.model.id) {
        throw Error(Errc::invariant_violation, "building '" + a.model.id + "' appears in more than one archive");
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace thermomap
