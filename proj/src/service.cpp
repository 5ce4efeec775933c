#include "thermomap/service.hpp"

#include <httplib.h>

#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <limits>

#include "thermomap/error.hpp"

namespace thermomap {

using nlohmann::json;

namespace {

double steady_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

std::optional<double> query_number(const HttpRequest& r, const std::string& key) {
  const auto it = r.query.find(key);
  if (it == r.query.end() || it->second.empty()) return std::nullopt;
  double v = 0.0;
  const auto& s = it->second;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(Errc::invalid_argument, "query parameter '" + key + "' is not a finite number");
  }
  return v;
}

std::optional<std::string> query_string(const HttpRequest& r, const std::string& key) {
  const auto it = r.query.find(key);
  if (it == r.query.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

int status_for(Errc code) {
  switch (code) {
    case Errc::unknown_building:
    case Errc::unknown_room:
    case Errc::unknown_sensor:
    case Errc::unknown_property:
    case Errc::no_frames:
    case Errc::empty_range: return 404;
    case Errc::parse_error:
    case Errc::invalid_argument:
    case Errc::invariant_violation:
    case Errc::extrapolation: return 400;
    default: return 500;
  }
}

HttpResponse error_response(int status, std::string_view code, std::string_view message) {
  return {status, "application/json", json{{"error", code}, {"message", message}}.dump(), {}};
}

std::string code_name(Errc code) {
  std::string s(to_string(code));
  for (char& c : s) c = c == ' ' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

HttpResponse json_response(const json& body) { return {200, "application/json", body.dump(), {}}; }

std::string format_time(double t) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), t);
  return {buf.data(), end};
}

}  // namespace

Service::Service(std::vector<Archive> archives, ServiceOptions options)
    : archives_(std::move(archives)), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  if (!options_.wall_clock) options_.wall_clock = steady_seconds;
  if (options_.live_speed && !(*options_.live_speed > 0.0)) {
    throw Error(Errc::invalid_argument, "live speed must be > 0");
  }
  started_ = options_.wall_clock();
}

Service::~Service() = default;

std::vector<std::string> Service::building_ids() const {
  std::vector<std::string> ids;
  for (const auto& a : archives_) ids.push_back(a.model.id);
  return ids;
}

std::vector<AccessLogEntry> Service::access_log() const {
  std::lock_guard lock(log_mutex_);
  return log_;
}

const Archive& Service::archive(const std::string& id) const {
  for (const auto& a : archives_) {
    if (a.model.id == id) return a;
  }
  throw Error(Errc::unknown_building, "unknown building '" + id + "'");
}

ThermalFrame Service::live_frame(const Archive& a) const {
  ThermalFrame latest = a.supervisor->live_frame(a.model.id);
  if (!options_.live_speed) return latest;
  const double virtual_now = a.supervisor->store().earliest()->t + (options_.wall_clock() - started_) * *options_.live_speed;
  if (virtual_now >= latest.t) return latest;
  return *a.supervisor->frame_at(a.model.id, virtual_now);
}

HttpResponse Service::scene_response(const Archive& a, const ThermalFrame& frame, const HttpRequest& r) const {
  SceneOptions opts = a.scene_defaults;
  if (const auto v = query_string(r, "layer")) opts.layer = parse_layer(*v);
  if (const auto v = query_string(r, "walls")) opts.walls = parse_wall_mode(*v);
  if (const auto v = query_string(r, "primitive")) opts.primitive = parse_primitive(*v);
  if (const auto v = query_number(r, "spacing")) opts.cell_spacing = *v;
  if (const auto v = query_number(r, "detail")) opts.detail_radius = *v;
  if (const auto v = query_number(r, "mid")) opts.mid_radius = *v;
  const auto vx = query_number(r, "vx");
  const auto vy = query_number(r, "vy");
  const auto vz = query_number(r, "vz");
  const int given = int{vx.has_value()} + int{vy.has_value()} + int{vz.has_value()};
  if (given != 0 && given != 3) throw Error(Errc::invalid_argument, "viewpoint needs all of vx, vy and vz");
  X3DDocument doc;
  if (given == 3) {
    opts.viewpoint = Vec3{*vx, *vy, *vz};
    doc = view_dependent_scene(frame, a.model, opts);
  } else {
    doc = generate_scene(frame, a.model, opts);
  }
  HttpResponse resp{200, "model/x3d+xml", serialize_x3d(doc), {}};
  resp.headers["X-Thermal-Legend"] = legend_json(doc);
  resp.headers["X-Frame-Time"] = format_time(frame.t);
  resp.headers["X-Nominal-Polygons"] = std::to_string(doc.nominal_polygons);
  return resp;
}

HttpResponse Service::route(const HttpRequest& r) {
  const auto parts = split_path(r.path);
  if (parts.empty() || parts[0] != "buildings") return error_response(404, "NOT_FOUND", "no such resource");
  if (parts.size() == 1) return json_response(building_ids());
  const Archive& a = archive(parts[1]);
  const auto& sup = *a.supervisor;
  const std::string rest = parts.size() == 3 ? parts[2] : (parts.size() == 4 ? parts[2] + "/" + parts[3] : "");

  if (rest == "frames") {
    const double from = query_number(r, "from").value_or(-std::numeric_limits<double>::infinity());
    const double to = query_number(r, "to").value_or(std::numeric_limits<double>::infinity());
    json out = json::array();
    for (const auto& f : sup.query_range(a.model.id, from, to)) out.push_back(json::parse(frame_to_json(f)));
    return json_response(out);
  }
  if (rest == "scene") {
    const auto t = query_number(r, "t");
    std::optional<ThermalFrame> frame = t ? sup.frame_at(a.model.id, *t) : std::optional(sup.live_frame(a.model.id));
    if (!frame) throw Error(Errc::no_frames, "no frame at or before t=" + format_time(*t));
    return scene_response(a, *frame, r);
  }
  if (rest == "live/scene") return scene_response(a, live_frame(a), r);
  if (rest == "playback") {
    const double from = query_number(r, "from").value_or(-std::numeric_limits<double>::infinity());
    const double to = query_number(r, "to").value_or(std::numeric_limits<double>::infinity());
    const double speed = query_number(r, "speed").value_or(1.0);
    double t0 = from;
    if (std::isinf(t0)) {
      const auto frames = sup.query_range(a.model.id, from, to);
      if (frames.empty()) throw Error(Errc::empty_range, "no frames in the requested playback range");
      t0 = frames.front().t;
    }
    const PlaybackPlan plan = sup.playback(a.model.id, t0, to, speed);
    json frames = json::array();
    for (std::size_t i = 0; i < plan.frame_times.size(); ++i) {
      frames.push_back({{"t", plan.frame_times[i]},
                        {"presentation_time", plan.presentation_times[i]},
                        {"url", "/buildings/" + a.model.id + "/scene?t=" + format_time(plan.frame_times[i])}});
    }
    return json_response({{"building_id", plan.building_id},
                          {"t0", plan.t0},
                          {"t1", std::isinf(plan.t1) ? plan.frame_times.back() : plan.t1},
                          {"speed", plan.speed},
                          {"frames", frames}});
  }
  return error_response(404, "NOT_FOUND", "no such resource");
}

HttpResponse Service::handle(const HttpRequest& request) {
  HttpResponse resp;
  if (request.method != "GET") {
    resp = error_response(405, "METHOD_NOT_ALLOWED", "the service is read-only");
  } else {
    try {
      resp = route(request);
    } catch (const Error& e) {
      resp = error_response(status_for(e.code()), code_name(e.code()), e.what());
    } catch (const std::exception& e) {
      resp = error_response(500, "INTERNAL", e.what());
    }
  }
  std::lock_guard lock(log_mutex_);
  log_.push_back({request.method, request.path, resp.status});
  return resp;
}

void Service::listen(const std::string& host, int port) {
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r{req.method, req.path, {}};
    for (const auto& [k, v] : req.params) r.query[k] = v;
    const HttpResponse out = handle(r);
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(out.body, out.content_type);
  };
  server_->Get(".*", forward);
  for (const char* method : {"POST", "PUT", "DELETE", "PATCH"}) {
    const std::string m = method;
    auto reject = [this, m](const httplib::Request& req, httplib::Response& res) {
      const HttpResponse out = handle({m, req.path, {}});
      res.status = out.status;
      res.set_content(out.body, out.content_type);
    };
    if (m == "POST") server_->Post(".*", reject);
    if (m == "PUT") server_->Put(".*", reject);
    if (m == "DELETE") server_->Delete(".*", reject);
    if (m == "PATCH") server_->Patch(".*", reject);
  }
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::io_error, "cannot bind " + host + ":" + std::to_string(port));
  bound_port_ = bound;
  if (!server_->listen_after_bind()) throw Error(Errc::io_error, "server stopped with an error");
}

void Service::wait_until_ready() const { server_->wait_until_ready(); }

void Service::stop() { server_->stop(); }

}  // namespace thermomap
