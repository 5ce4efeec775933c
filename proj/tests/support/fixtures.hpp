#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "thermomap/building.hpp"
#include "thermomap/field.hpp"
#include "thermomap/supervisor.hpp"

namespace fixtures {

inline std::filesystem::path data_dir() { return THERMOMAP_DATA_DIR; }

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string config(const std::string& name) { return read_text(data_dir() / name); }

/// Zero-noise frame sampling the scenario at every placement.
inline thermomap::ThermalFrame truth_frame(const thermomap::BuildingModel& model,
                                           const thermomap::FieldScenario& scenario,
                                           const std::vector<thermomap::SensorPlacement>& placements, double t) {
  thermomap::ThermalFrame f{model.id, t, {}, 1.0};
  for (const auto& p : placements) {
    const auto v = thermomap::ground_truth(scenario, p.position, t);
    f.samples[p.sensor_id] = {p.room_id, p.position, v.temp, v.rh};
  }
  return f;
}

inline thermomap::ThermalFrame uniform_frame(const thermomap::BuildingModel& model, double temp, double rh,
                                             thermomap::PlacementStrategy strategy =
                                                 thermomap::PlacementStrategy::corners8) {
  thermomap::FieldScenario s;
  s.baseline_temp = temp;
  s.baseline_rh = rh;
  return truth_frame(model, s, thermomap::place_building(model, strategy), 0.0);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "thermomap_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
