#include "thermomap/validation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "json_util.hpp"
#include "thermomap/error.hpp"

namespace thermomap {

using detail::json;

Plane Plane::parse(std::string_view text) {
  if (text.size() < 3 || text[1] != '=') {
    throw Error(Errc::invalid_argument, "plane must look like z=1.5, got '" + std::string(text) + "'");
  }
  Plane p;
  switch (text[0]) {
    case 'x': case 'X': p.axis = 0; break;
    case 'y': case 'Y': p.axis = 1; break;
    case 'z': case 'Z': p.axis = 2; break;
    default: throw Error(Errc::invalid_argument, "plane axis must be x, y or z in '" + std::string(text) + "'");
  }
  const std::string_view number = text.substr(2);
  const auto [end, ec] = std::from_chars(number.data(), number.data() + number.size(), p.offset);
  if (ec != std::errc{} || end != number.data() + number.size() || !std::isfinite(p.offset)) {
    throw Error(Errc::invalid_argument, "bad plane offset in '" + std::string(text) + "'");
  }
  return p;
}

std::string Plane::to_string() const {
  std::string s(1, "xyz"[axis]);
  s += '=';
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), offset);
  s.append(buf.data(), end);
  return s;
}

std::array<int, 2> Plane::in_plane_axes() const {
  switch (axis) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

Extent2D project_extent(const Aabb& box, const Plane& plane) {
  const auto [u, v] = plane.in_plane_axes();
  if (plane.offset < box.min[plane.axis] || plane.offset > box.max[plane.axis]) {
    throw Error(Errc::invalid_argument, "plane " + plane.to_string() + " does not intersect the region");
  }
  return {box.min[u], box.max[u], box.min[v], box.max[v]};
}

Vec3 CrossSectionRaster::point(int i, int j) const {
  const auto [u, v] = plane.in_plane_axes();
  Vec3 p;
  p[plane.axis] = plane.offset;
  p[u] = extent.u0 + (extent.u1 - extent.u0) * static_cast<double>(i) / static_cast<double>(width - 1);
  p[v] = extent.v0 + (extent.v1 - extent.v0) * static_cast<double>(j) / static_cast<double>(height - 1);
  return p;
}

double CrossSectionRaster::min_value() const { return *std::min_element(values.begin(), values.end()); }
double CrossSectionRaster::max_value() const { return *std::max_element(values.begin(), values.end()); }

CrossSectionRaster cross_section(const ScalarField& field, const Plane& plane, int width, int height,
                                 const Extent2D& extent) {
  if (width < 2 || height < 2) throw Error(Errc::invalid_argument, "raster needs at least 2x2 pixels");
  if (!(extent.u0 < extent.u1 && extent.v0 < extent.v1)) {
    throw Error(Errc::invalid_argument, "raster extent must have positive area");
  }
  CrossSectionRaster r{plane, width, height, extent, {}};
  r.values.reserve(static_cast<std::size_t>(width) * height);
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) {
      const double v = field(r.point(i, j));
      if (!std::isfinite(v)) throw Error(Errc::invariant_violation, "field is not finite in the section");
      r.values.push_back(v);
    }
  }
  return r;
}

namespace {

std::size_t argmax(const std::vector<double>& values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

bool flat(const CrossSectionRaster& r) {
  const double hi = r.max_value();
  return hi - r.min_value() <= 1e-9 * std::max(1.0, std::fabs(hi));
}

}  // namespace

ComparisonReport compare(const CrossSectionRaster& a, const CrossSectionRaster& b, const Tolerances& tol) {
  const bool same_extent = a.extent.u0 == b.extent.u0 && a.extent.u1 == b.extent.u1 && a.extent.v0 == b.extent.v0 &&
                           a.extent.v1 == b.extent.v1;
  if (a.width != b.width || a.height != b.height || !same_extent || a.plane.axis != b.plane.axis ||
      a.plane.offset != b.plane.offset) {
    throw Error(Errc::mismatch, "rasters differ in plane, resolution or extent");
  }
  ComparisonReport r;
  double sum = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    const double d = a.values[k] - b.values[k];
    sum += d * d;
    r.max_abs_error = std::max(r.max_abs_error, std::fabs(d));
  }
  r.rms_error = std::sqrt(sum / static_cast<double>(a.values.size()));
  if (!flat(a) && !flat(b)) {
    const std::size_t ka = argmax(a.values);
    const std::size_t kb = argmax(b.values);
    const auto w = static_cast<std::size_t>(a.width);
    r.hotspot_offset = distance(a.point(static_cast<int>(ka % w), static_cast<int>(ka / w)),
                                b.point(static_cast<int>(kb % w), static_cast<int>(kb / w)));
  }
  r.pass = r.rms_error <= tol.rms && r.max_abs_error <= tol.max_abs && r.hotspot_offset <= tol.hotspot_offset;
  return r;
}

std::string to_pgm16(const CrossSectionRaster& raster, double lo, double hi) {
  if (!(lo < hi)) throw Error(Errc::invalid_argument, "PGM range needs lo < hi");
  std::string out = "P5\n" + std::to_string(raster.width) + " " + std::to_string(raster.height) + "\n65535\n";
  out.reserve(out.size() + raster.values.size() * 2);
  for (double v : raster.values) {
    const double u = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    const auto code = static_cast<std::uint16_t>(std::lround(u * 65535.0));
    out.push_back(static_cast<char>(code >> 8));
    out.push_back(static_cast<char>(code & 0xFF));
  }
  return out;
}

std::string raster_metadata_json(const CrossSectionRaster& raster, double lo, double hi, std::string_view units) {
  return json{{"plane", raster.plane.to_string()},
              {"width", raster.width},
              {"height", raster.height},
              {"extent", {{"u0", raster.extent.u0}, {"u1", raster.extent.u1}, {"v0", raster.extent.v0},
                          {"v1", raster.extent.v1}}},
              {"lo", lo},
              {"hi", hi},
              {"units", units},
              {"row_major", true},
              {"min", raster.min_value()},
              {"max", raster.max_value()}}
      .dump(2);
}

BuildingField reconstruct_from_truth(const BuildingModel& model, const FieldScenario& scenario,
                                     const std::vector<SensorPlacement>& placements, double t,
                                     ReconstructionChoice choice) {
  std::map<std::string, std::vector<PositionedSample>> by_room;
  for (const auto& p : placements) by_room[p.room_id].push_back({p.position, ground_truth(scenario, p.position, t)});
  return BuildingField(model, by_room, choice);
}

ValidationResult run_validation(const BuildingModel& model, const FieldScenario& scenario,
                                const ValidationOptions& opts) {
  scenario.validate();
  const Extent2D extent = project_extent(model.envelope, opts.plane);
  const auto truth_fn = [&](const Vec3& p) { return ground_truth(scenario, p, opts.t).temp; };

  ValidationResult result;
  result.truth = cross_section(truth_fn, opts.plane, opts.width, opts.height, extent);

  const auto placements = place_building(model, opts.strategy);
  result.sensors = placements.size();
  const BuildingField field = reconstruct_from_truth(model, scenario, placements, opts.t);
  result.reconstructed =
      cross_section([&](const Vec3& p) { return field.evaluate(p).temp; }, opts.plane, opts.width, opts.height, extent);
  result.report = compare(result.reconstructed, result.truth, opts.tolerances);

  result.convergence_monotone = true;
  for (double spacing : opts.spacings) {
    std::vector<SensorPlacement> lattice;
    for (const Room* room : model.rooms()) {
      auto nodes = place_lattice(*room, spacing);
      lattice.insert(lattice.end(), nodes.begin(), nodes.end());
    }
    const BuildingField lf = reconstruct_from_truth(model, scenario, lattice, opts.t, ReconstructionChoice::linear_grid);
    const auto raster =
        cross_section([&](const Vec3& p) { return lf.evaluate(p).temp; }, opts.plane, opts.width, opts.height, extent);
    const ComparisonReport cr = compare(raster, result.truth, opts.tolerances);
    if (!result.convergence.empty() && cr.rms_error > result.convergence.back().rms_error) {
      result.convergence_monotone = false;
    }
    result.convergence.push_back({spacing, lattice.size(), cr.rms_error, cr.max_abs_error});
  }
  return result;
}

std::string validation_report_json(const ValidationResult& result, const ValidationOptions& opts,
                                   std::string_view building_id, std::string_view scenario_name) {
  json convergence = json::array();
  for (const auto& c : result.convergence) {
    convergence.push_back({{"spacing", c.spacing},
                           {"sensors", c.sensors},
                           {"rms_error", c.rms_error},
                           {"max_abs_error", c.max_abs_error}});
  }
  const bool final_ok = !result.convergence.empty() && result.convergence.back().rms_error <= opts.tolerances.rms;
  return json{{"building_id", building_id},
              {"scenario", scenario_name},
              {"plane", opts.plane.to_string()},
              {"resolution", {opts.width, opts.height}},
              {"t", opts.t},
              {"strategy", to_string(opts.strategy)},
              {"sensors", result.sensors},
              {"tolerances",
               {{"rms", opts.tolerances.rms},
                {"max_abs", opts.tolerances.max_abs},
                {"hotspot_offset", opts.tolerances.hotspot_offset}}},
              {"comparison",
               {{"rms_error", result.report.rms_error},
                {"max_abs_error", result.report.max_abs_error},
                {"hotspot_offset", result.report.hotspot_offset},
                {"pass", result.report.pass}}},
              {"convergence",
               {{"points", convergence}, {"monotone", result.convergence_monotone}, {"final_within_rms", final_ok}}}}
      .dump(2);
}

}  // namespace thermomap
