#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thermomap/building.hpp"
#include "thermomap/geometry.hpp"

namespace thermomap {

/// Temperature in degrees Celsius and relative humidity in percent.
struct FieldValue {
  double temp = 0.0;
  double rh = 0.0;
  friend bool operator==(const FieldValue&, const FieldValue&) = default;
};

inline constexpr double kSensorTempMin = -40.0;
inline constexpr double kSensorTempMax = 123.8;

struct Hotspot {
  Vec3 center;
  double amplitude_temp = 0.0;
  double amplitude_rh = 0.0;
  double sigma = 1.0;  // meters
  double onset = 0.0;  // seconds of linear ramp-in from t = 0; 0 means fully on
  double decay = 0.0;  // e-folding time after the ramp; 0 means no decay

  /// Time envelope in [0, 1].
  double envelope(double t) const;
};

struct Diurnal {
  double amplitude = 0.0;     // degrees C
  double amplitude_rh = 0.0;  // percent
  double period = 86400.0;    // seconds
};

/// Synthetic ground truth: baseline + diurnal sine + Gaussian hotspots.
struct FieldScenario {
  std::string name = "uniform";
  double baseline_temp = 20.0;
  double baseline_rh = 50.0;
  std::vector<Hotspot> hotspots;
  Diurnal diurnal;

  void validate() const;
};

FieldValue ground_truth(const FieldScenario& scenario, const Vec3& p, double t);

/// Reads the optional "scenario" section of a config document. Either an
/// explicit scenario object or {"preset": name}; absent means "smooth".
FieldScenario load_scenario(std::string_view config_text, const BuildingModel& model);

/// Named scenarios laid out relative to the building envelope:
/// uniform, smooth, overheated_corner, cold_wet_corner.
FieldScenario scenario_preset(std::string_view name, const BuildingModel& model);

/// Decoded reading from one end-point at one instant.
struct SensorSample {
  std::string sensor_id;
  double t = 0.0;
  double temp = 0.0;
  double rh = 0.0;
  std::uint32_t seq = 0;  // end-point sequence number, kept for staleness checks
  friend bool operator==(const SensorSample&, const SensorSample&) = default;
};

struct PositionedSample {
  Vec3 position;
  FieldValue value;
};

enum class ReconstructionMethod { linear_grid, bell_kernel };

std::string_view to_string(ReconstructionMethod method) noexcept;

inline constexpr double kDefaultSnapEpsilon = 0.01;

/// Continuous field over a room built from discrete samples.
///
/// linear_grid: trilinear interpolation on a complete rectangular lattice
/// (axes may be non-uniform; an axis with a single node is degenerate and
/// only that coordinate is inside the hull).
/// bell_kernel: snap to a sample closer than snap_epsilon, otherwise a
/// normalized Gaussian weighting of all samples.
class ReconstructionField {
 public:
  static ReconstructionField linear_grid(std::vector<PositionedSample> samples);
  /// Without kernel_sigma, half the mean nearest-neighbor distance is used.
  static ReconstructionField bell_kernel(std::vector<PositionedSample> samples,
                                         std::optional<double> kernel_sigma = std::nullopt,
                                         double snap_epsilon = kDefaultSnapEpsilon);
  /// linear_grid when the samples form a complete lattice, bell_kernel otherwise.
  static ReconstructionField automatic(std::vector<PositionedSample> samples);

  static bool forms_grid(const std::vector<PositionedSample>& samples);

  FieldValue reconstruct(const Vec3& p) const;

  ReconstructionMethod method() const { return method_; }
  double kernel_sigma() const { return kernel_sigma_; }
  double snap_epsilon() const { return snap_epsilon_; }
  const std::vector<PositionedSample>& samples() const { return samples_; }

 private:
  ReconstructionField() = default;
  FieldValue trilinear(const Vec3& p) const;
  FieldValue bell(const Vec3& p) const;

  ReconstructionMethod method_ = ReconstructionMethod::bell_kernel;
  std::vector<PositionedSample> samples_;
  double kernel_sigma_ = 0.0;
  double snap_epsilon_ = kDefaultSnapEpsilon;
  // linear_grid only: sorted node coordinates per axis and values indexed x fastest.
  std::array<std::vector<double>, 3> axes_;
  std::vector<FieldValue> lattice_;
};

inline FieldValue reconstruct(const ReconstructionField& field, const Vec3& p) { return field.reconstruct(p); }

double mean_nearest_neighbor_distance(const std::vector<PositionedSample>& samples);

enum class ReconstructionChoice { automatic, linear_grid, bell_kernel };

/// Per-room reconstruction across a building. Points outside every room are
/// evaluated in the nearest room at the clamped point.
class BuildingField {
 public:
  BuildingField(const BuildingModel& model, const std::map<std::string, std::vector<PositionedSample>>& by_room,
                ReconstructionChoice choice = ReconstructionChoice::automatic);

  /// Null when the room had no samples.
  const ReconstructionField* room_field(std::string_view room_id) const;
  FieldValue evaluate(const Vec3& p) const;

 private:
  std::vector<std::pair<std::string, Aabb>> rooms_;  // rooms with a field, building order
  std::map<std::string, ReconstructionField, std::less<>> fields_;
};

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Blue-to-red linear ramp between lo and hi, clamped outside.
struct ColorMap {
  double lo = 15.0;
  double hi = 35.0;
  void validate() const;
};

inline constexpr ColorMap kDefaultTemperatureMap{15.0, 35.0};
inline constexpr ColorMap kDefaultHumidityMap{20.0, 80.0};

Rgb color_for(double value, const ColorMap& map);

struct TransparencyRamp {
  double t_near = 0.4;
  double t_far = 0.85;
  double d_ref = 50.0;  // meters
};

double alpha_for_distance(double d, const TransparencyRamp& ramp = {});

}  // namespace thermomap
