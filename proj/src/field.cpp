#include "thermomap/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "json_util.hpp"
#include "thermomap/error.hpp"

namespace thermomap {

using detail::json;

namespace {

constexpr double kLatticeTol = 1e-9;

double clamp_rh(double rh) { return std::clamp(rh, 0.0, 100.0); }

// Distinct coordinates with near-equal values merged.
std::vector<double> distinct_sorted(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  for (double v : values) {
    if (out.empty() || v - out.back() > kLatticeTol) out.push_back(v);
  }
  return out;
}

std::optional<std::size_t> node_index(const std::vector<double>& axis, double v) {
  const auto it = std::lower_bound(axis.begin(), axis.end(), v - kLatticeTol);
  if (it == axis.end() || std::abs(*it - v) > kLatticeTol) return std::nullopt;
  return static_cast<std::size_t>(it - axis.begin());
}

struct Lattice {
  std::array<std::vector<double>, 3> axes;
  std::vector<FieldValue> values;
};

std::optional<Lattice> build_lattice(const std::vector<PositionedSample>& samples) {
  if (samples.empty()) return std::nullopt;
  Lattice lat;
  for (int a = 0; a < 3; ++a) {
    std::vector<double> coords;
    coords.reserve(samples.size());
    for (const auto& s : samples) coords.push_back(s.position[a]);
    lat.axes[a] = distinct_sorted(std::move(coords));
  }
  const std::size_t nx = lat.axes[0].size();
  const std::size_t ny = lat.axes[1].size();
  const std::size_t nz = lat.axes[2].size();
  if (nx * ny * nz != samples.size()) return std::nullopt;
  lat.values.resize(samples.size());
  std::vector<bool> filled(samples.size(), false);
  for (const auto& s : samples) {
    const auto i = node_index(lat.axes[0], s.position.x);
    const auto j = node_index(lat.axes[1], s.position.y);
    const auto k = node_index(lat.axes[2], s.position.z);
    if (!i || !j || !k) return std::nullopt;
    const std::size_t slot = (*k * ny + *j) * nx + *i;
    if (filled[slot]) return std::nullopt;
    filled[slot] = true;
    lat.values[slot] = s.value;
  }
  return lat;
}

FieldValue lerp(const FieldValue& a, const FieldValue& b, double f) {
  // (1-f)a + fb is exact at both f = 0 and f = 1.
  return {(1.0 - f) * a.temp + f * b.temp, (1.0 - f) * a.rh + f * b.rh};
}

}  // namespace

double Hotspot::envelope(double t) const {
  double e = 1.0;
  if (onset > 0.0) e = std::clamp(t / onset, 0.0, 1.0);
  if (decay > 0.0) e *= std::exp(-std::max(0.0, t - onset) / decay);
  return e;
}

void FieldScenario::validate() const {
  if (!(diurnal.period > 0.0)) throw Error(Errc::invariant_violation, "scenario diurnal period must be > 0");
  for (std::size_t i = 0; i < hotspots.size(); ++i) {
    if (!(hotspots[i].sigma > 0.0)) {
      throw Error(Errc::invariant_violation, "scenario hotspot " + std::to_string(i) + ": sigma must be > 0");
    }
    if (hotspots[i].onset < 0.0 || hotspots[i].decay < 0.0) {
      throw Error(Errc::invariant_violation,
                  "scenario hotspot " + std::to_string(i) + ": onset/decay must be >= 0");
    }
  }
}

FieldValue ground_truth(const FieldScenario& scenario, const Vec3& p, double t) {
  const double phase = std::sin(2.0 * std::numbers::pi * t / scenario.diurnal.period);
  double temp = scenario.baseline_temp + scenario.diurnal.amplitude * phase;
  double rh = scenario.baseline_rh + scenario.diurnal.amplitude_rh * phase;
  for (const auto& h : scenario.hotspots) {
    const double k = std::exp(-norm2(p - h.center) / (2.0 * h.sigma * h.sigma)) * h.envelope(t);
    temp += h.amplitude_temp * k;
    rh += h.amplitude_rh * k;
  }
  return {temp, clamp_rh(rh)};
}

FieldScenario scenario_preset(std::string_view name, const BuildingModel& model) {
  const Aabb& env = model.envelope;
  const Vec3 e = env.extent();
  FieldScenario s;
  s.name = std::string(name);
  if (name == "uniform") {
    return s;
  }
  if (name == "smooth") {
    s.baseline_temp = 21.0;
    s.baseline_rh = 45.0;
    s.diurnal = {1.5, 3.0, 86400.0};
    s.hotspots.push_back({{env.min.x + 0.3 * e.x, env.min.y + 0.6 * e.y, env.min.z + 0.5 * e.z},
                          3.0,
                          -5.0,
                          std::max(4.0, 0.5 * std::max(e.x, e.y))});
    return s;
  }
  if (name == "overheated_corner") {
    // Attic-level corner at the building's minimum x/y.
    s.baseline_temp = 21.0;
    s.baseline_rh = 45.0;
    s.hotspots.push_back({{env.min.x, env.min.y, env.max.z}, 10.0, -10.0, 2.5});
    return s;
  }
  if (name == "cold_wet_corner") {
    s.baseline_temp = 21.0;
    s.baseline_rh = 45.0;
    s.hotspots.push_back({{env.max.x, env.max.y, env.max.z}, -6.0, 35.0, 1.5});
    return s;
  }
  throw Error(Errc::invalid_argument, "unknown scenario preset '" + std::string(name) + "'");
}

FieldScenario load_scenario(std::string_view config_text, const BuildingModel& model) {
  const json doc = detail::parse_document(config_text);
  const auto it = doc.find("scenario");
  if (it == doc.end()) return scenario_preset("smooth", model);
  const json& sj = *it;
  const std::string path = "scenario";
  if (!sj.is_object()) detail::field_error(path, "expected an object");
  if (sj.contains("preset")) {
    const std::string preset = detail::require_string(sj, "preset", path);
    try {
      return scenario_preset(preset, model);
    } catch (const Error&) {
      detail::field_error(path + ".preset", "unknown preset '" + preset + "'");
    }
  }
  FieldScenario s;
  s.name = detail::string_or(sj, "name", "custom", path);
  s.baseline_temp = detail::number_or(sj, "baseline_temp", s.baseline_temp, path);
  s.baseline_rh = detail::number_or(sj, "baseline_rh", s.baseline_rh, path);
  if (sj.contains("diurnal")) {
    const json& dj = sj["diurnal"];
    const std::string dpath = path + ".diurnal";
    s.diurnal.amplitude = detail::number_or(dj, "amplitude", 0.0, dpath);
    s.diurnal.amplitude_rh = detail::number_or(dj, "amplitude_rh", 0.0, dpath);
    s.diurnal.period = detail::number_or(dj, "period", 86400.0, dpath);
  }
  if (sj.contains("hotspots")) {
    const json& hs = sj["hotspots"];
    if (!hs.is_array()) detail::field_error(path + ".hotspots", "expected an array");
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const std::string hpath = path + ".hotspots[" + std::to_string(i) + "]";
      Hotspot h;
      h.center = detail::require_vec3(hs[i], "center", hpath);
      h.amplitude_temp = detail::number_or(hs[i], "amplitude_temp", 0.0, hpath);
      h.amplitude_rh = detail::number_or(hs[i], "amplitude_rh", 0.0, hpath);
      h.sigma = detail::require_number(hs[i], "sigma", hpath);
      h.onset = detail::number_or(hs[i], "onset", 0.0, hpath);
      h.decay = detail::number_or(hs[i], "decay", 0.0, hpath);
      s.hotspots.push_back(h);
    }
  }
  s.validate();
  return s;
}

std::string_view to_string(ReconstructionMethod method) noexcept {
  return method == ReconstructionMethod::linear_grid ? "linear_grid" : "bell_kernel";
}

double mean_nearest_neighbor_distance(const std::vector<PositionedSample>& samples) {
  if (samples.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (i != j) best = std::min(best, distance(samples[i].position, samples[j].position));
    }
    total += best;
  }
  return total / static_cast<double>(samples.size());
}

bool ReconstructionField::forms_grid(const std::vector<PositionedSample>& samples) {
  return build_lattice(samples).has_value();
}

ReconstructionField ReconstructionField::linear_grid(std::vector<PositionedSample> samples) {
  auto lattice = build_lattice(samples);
  if (!lattice) {
    throw Error(Errc::invariant_violation, "linear_grid reconstruction needs samples on a complete rectangular grid");
  }
  ReconstructionField f;
  f.method_ = ReconstructionMethod::linear_grid;
  f.samples_ = std::move(samples);
  f.axes_ = std::move(lattice->axes);
  f.lattice_ = std::move(lattice->values);
  return f;
}

ReconstructionField ReconstructionField::bell_kernel(std::vector<PositionedSample> samples,
                                                     std::optional<double> kernel_sigma, double snap_epsilon) {
  if (samples.empty()) throw Error(Errc::invariant_violation, "reconstruction needs at least one sample");
  ReconstructionField f;
  f.method_ = ReconstructionMethod::bell_kernel;
  f.snap_epsilon_ = snap_epsilon;
  if (kernel_sigma) {
    if (!(*kernel_sigma > 0.0)) throw Error(Errc::invalid_argument, "kernel_sigma must be > 0");
    f.kernel_sigma_ = *kernel_sigma;
  } else {
    const double nn = mean_nearest_neighbor_distance(samples);
    f.kernel_sigma_ = nn > 0.0 ? nn / 2.0 : 1.0;
  }
  f.samples_ = std::move(samples);
  return f;
}

ReconstructionField ReconstructionField::automatic(std::vector<PositionedSample> samples) {
  if (forms_grid(samples)) return linear_grid(std::move(samples));
  return bell_kernel(std::move(samples));
}

FieldValue ReconstructionField::reconstruct(const Vec3& p) const {
  return method_ == ReconstructionMethod::linear_grid ? trilinear(p) : bell(p);
}

FieldValue ReconstructionField::trilinear(const Vec3& p) const {
  std::array<std::size_t, 3> lo{};
  std::array<double, 3> frac{};
  for (int a = 0; a < 3; ++a) {
    const auto& axis = axes_[a];
    const double tol = kLatticeTol * std::max(1.0, axis.back() - axis.front());
    if (p[a] < axis.front() - tol || p[a] > axis.back() + tol) {
      throw Error(Errc::extrapolation, "point outside the sensor grid hull on axis " + std::to_string(a));
    }
    if (axis.size() == 1) continue;
    const auto it = std::upper_bound(axis.begin(), axis.end(), p[a]);
    std::size_t i = it == axis.begin() ? 0 : static_cast<std::size_t>(it - axis.begin()) - 1;
    i = std::min(i, axis.size() - 2);
    lo[a] = i;
    frac[a] = std::clamp((p[a] - axis[i]) / (axis[i + 1] - axis[i]), 0.0, 1.0);
  }
  const std::size_t nx = axes_[0].size();
  const std::size_t ny = axes_[1].size();
  auto at = [&](std::size_t dx, std::size_t dy, std::size_t dz) {
    const std::size_t i = std::min(lo[0] + dx, nx - 1);
    const std::size_t j = std::min(lo[1] + dy, ny - 1);
    const std::size_t k = std::min(lo[2] + dz, axes_[2].size() - 1);
    return lattice_[(k * ny + j) * nx + i];
  };
  const FieldValue c00 = lerp(at(0, 0, 0), at(1, 0, 0), frac[0]);
  const FieldValue c10 = lerp(at(0, 1, 0), at(1, 1, 0), frac[0]);
  const FieldValue c01 = lerp(at(0, 0, 1), at(1, 0, 1), frac[0]);
  const FieldValue c11 = lerp(at(0, 1, 1), at(1, 1, 1), frac[0]);
  const FieldValue c0 = lerp(c00, c10, frac[1]);
  const FieldValue c1 = lerp(c01, c11, frac[1]);
  return lerp(c0, c1, frac[2]);
}

FieldValue ReconstructionField::bell(const Vec3& p) const {
  double best = std::numeric_limits<double>::infinity();
  std::size_t nearest = 0;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const double d2 = norm2(p - samples_[i].position);
    if (d2 < best) {
      best = d2;
      nearest = i;
    }
  }
  if (std::sqrt(best) < snap_epsilon_) return samples_[nearest].value;
  // Weights are shifted by the nearest distance so far-away points do not underflow.
  const double inv = 1.0 / (2.0 * kernel_sigma_ * kernel_sigma_);
  double wsum = 0.0, temp = 0.0, rh = 0.0;
  for (const auto& s : samples_) {
    const double w = std::exp(-(norm2(p - s.position) - best) * inv);
    wsum += w;
    temp += w * s.value.temp;
    rh += w * s.value.rh;
  }
  return {temp / wsum, rh / wsum};
}

BuildingField::BuildingField(const BuildingModel& model,
                             const std::map<std::string, std::vector<PositionedSample>>& by_room,
                             ReconstructionChoice choice)
{
  for (const auto& [room_id, samples] : by_room) {
    model.room(room_id);
    if (samples.empty()) continue;
    switch (choice) {
      case ReconstructionChoice::automatic:
        fields_.emplace(room_id, ReconstructionField::automatic(samples));
        break;
      case ReconstructionChoice::linear_grid:
        fields_.emplace(room_id, ReconstructionField::linear_grid(samples));
        break;
      case ReconstructionChoice::bell_kernel:
        fields_.emplace(room_id, ReconstructionField::bell_kernel(samples));
        break;
    }
  }
  if (fields_.empty()) throw Error(Errc::invariant_violation, "building field needs samples in at least one room");
  for (const Room* room : model.rooms()) {
    if (fields_.contains(room->id)) rooms_.emplace_back(room->id, room->aabb);
  }
}

const ReconstructionField* BuildingField::room_field(std::string_view room_id) const {
  const auto it = fields_.find(room_id);
  return it == fields_.end() ? nullptr : &it->second;
}

FieldValue BuildingField::evaluate(const Vec3& p) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rooms_.size(); ++i) {
    const double d = rooms_[i].second.distance_to(p);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
    if (d == 0.0) break;
  }
  const auto& [room_id, box] = rooms_[best];
  return room_field(room_id)->reconstruct(box.clamp(p));
}

void ColorMap::validate() const {
  if (!(lo < hi)) throw Error(Errc::invariant_violation, "color map needs lo < hi");
}

Rgb color_for(double value, const ColorMap& map) {
  const double u = std::clamp((value - map.lo) / (map.hi - map.lo), 0.0, 1.0);
  return {u, 0.0, 1.0 - u};
}

double alpha_for_distance(double d, const TransparencyRamp& ramp) {
  const double f = std::min(std::max(d, 0.0) / ramp.d_ref, 1.0);
  return std::clamp(ramp.t_near + (ramp.t_far - ramp.t_near) * f, 0.0, 1.0);
}

}  // namespace thermomap
