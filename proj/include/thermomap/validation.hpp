#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "thermomap/building.hpp"
#include "thermomap/field.hpp"

namespace thermomap {

/// Axis-normal plane, e.g. "z=1.5".
struct Plane {
  int axis = 2;
  double offset = 0.0;

  static Plane parse(std::string_view text);
  std::string to_string() const;
  /// The two in-plane axes in ascending order: (x,y) for z, (x,z) for y, (y,z) for x.
  std::array<int, 2> in_plane_axes() const;
};

/// Rectangle in the plane's (u, v) coordinates.
struct Extent2D {
  double u0 = 0.0;
  double u1 = 1.0;
  double v0 = 0.0;
  double v1 = 1.0;
};

Extent2D project_extent(const Aabb& box, const Plane& plane);

/// w x h samples of a scalar field on a plane. Pixel (i, j) sits at
/// u = u0 + i (u1 - u0) / (w - 1), v = v0 + j (v1 - v0) / (h - 1), so the
/// outer pixels lie on the extent edges. Values are row-major (j outer).
struct CrossSectionRaster {
  Plane plane;
  int width = 0;
  int height = 0;
  Extent2D extent;
  std::vector<double> values;

  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * width + i]; }
  Vec3 point(int i, int j) const;
  double min_value() const;
  double max_value() const;
};

using ScalarField = std::function<double(const Vec3&)>;

CrossSectionRaster cross_section(const ScalarField& field, const Plane& plane, int width, int height,
                                 const Extent2D& extent);

struct Tolerances {
  double rms = 0.5;             // field units
  double max_abs = 1e300;       // unchecked by default
  double hotspot_offset = 1.0;  // meters; one default cell spacing
};

struct ComparisonReport {
  double rms_error = 0.0;
  double max_abs_error = 0.0;
  double hotspot_offset = 0.0;  // meters between the argmax pixels; 0 if either raster is flat
  bool pass = false;
};

ComparisonReport compare(const CrossSectionRaster& a, const CrossSectionRaster& b, const Tolerances& tol = {});

/// Binary PGM, 16 bits per pixel, values mapped linearly from [lo, hi].
std::string to_pgm16(const CrossSectionRaster& raster, double lo, double hi);
std::string raster_metadata_json(const CrossSectionRaster& raster, double lo, double hi, std::string_view units);

struct ConvergencePoint {
  double spacing = 0.0;
  std::size_t sensors = 0;
  double rms_error = 0.0;
  double max_abs_error = 0.0;
};

struct ValidationOptions {
  Plane plane{2, 1.5};
  int width = 256;
  int height = 256;
  double t = 0.0;
  PlacementStrategy strategy = PlacementStrategy::corners8;
  std::vector<double> spacings{2.0, 1.0, 0.5};
  Tolerances tolerances;
};

struct ValidationResult {
  CrossSectionRaster truth;
  CrossSectionRaster reconstructed;
  ComparisonReport report;
  std::size_t sensors = 0;
  std::vector<ConvergencePoint> convergence;
  bool convergence_monotone = false;
};

/// Zero-noise reconstruction of the scenario temperature from `placements`.
BuildingField reconstruct_from_truth(const BuildingModel& model, const FieldScenario& scenario,
                                     const std::vector<SensorPlacement>& placements, double t,
                                     ReconstructionChoice choice = ReconstructionChoice::automatic);

/// Truth vs reconstruction at the configured placement strategy, plus the
/// lattice refinement study over opts.spacings (trilinear on each lattice).
ValidationResult run_validation(const BuildingModel& model, const FieldScenario& scenario,
                                const ValidationOptions& opts);

std::string validation_report_json(const ValidationResult& result, const ValidationOptions& opts,
                                   std::string_view building_id, std::string_view scenario_name);

}  // namespace thermomap
