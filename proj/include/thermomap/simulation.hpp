#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "thermomap/building.hpp"
#include "thermomap/endpoint.hpp"
#include "thermomap/field.hpp"
#include "thermomap/scene.hpp"
#include "thermomap/supervisor.hpp"

namespace thermomap {

struct RunConfig {
  std::string config_text;  // building config document (building + optional scenario)
  double cadence = 1.0;     // poll period, seconds
  double duration = 60.0;   // seconds
  std::uint64_t seed = 0;
  PlacementStrategy strategy = PlacementStrategy::corners8;
  std::optional<double> sample_period;  // end-point sampling; defaults to the cadence
  NoiseModel noise;
  LinkParams link;
  SceneOptions scene;
  std::filesystem::path out_dir;

  void validate() const;
};

struct ArtifactFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunArtifacts {
  std::filesystem::path out_dir;
  std::filesystem::path store_path;
  std::filesystem::path manifest_path;
  std::string building_id;
  std::size_t frames = 0;
  std::size_t polls = 0;
  std::size_t missing_samples = 0;
  std::vector<ArtifactFile> files;
  std::vector<std::string> notes;
};

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kConfigCopyName = "building.json";

/// Runs end-points, concentrators and the supervisor on a virtual clock for
/// floor(duration / cadence) poll cycles and writes the frame store, the last
/// scene, its legend and a manifest with SHA-256 checksums.
RunArtifacts run_simulation(const RunConfig& cfg);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// A finished run reopened for serving: model, placements and the frame
/// store rebuilt from disk.
struct Archive {
  std::filesystem::path dir;
  BuildingModel model;
  FieldScenario scenario;
  PlacementStrategy strategy = PlacementStrategy::corners8;
  double cadence = 1.0;
  SceneOptions scene_defaults;
  std::unique_ptr<Supervisor> supervisor;
};

Archive open_archive(const std::filesystem::path& dir);

/// Every archive in `store_dir` itself or one directory below it.
std::vector<Archive> open_store(const std::filesystem::path& store_dir);

}  // namespace thermomap
