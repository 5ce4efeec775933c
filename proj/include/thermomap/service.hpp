#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "thermomap/simulation.hpp"

namespace httplib {
class Server;
}

namespace thermomap {

struct HttpRequest {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> query;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

struct AccessLogEntry {
  std::string method;
  std::string path;
  int status = 0;
};

struct ServiceOptions {
  /// Virtual seconds per wall second for the live view. The live frame is the
  /// archive frame at first_t + elapsed * speed, capped at the latest frame.
  /// Unset serves the latest sealed frame.
  std::optional<double> live_speed;
  /// Wall clock in seconds; replaceable for tests.
  std::function<double()> wall_clock;
};

/// Viewer-facing read-only HTTP API over a set of archives.
///
///   GET /buildings
///   GET /buildings/{id}/frames?from&to
///   GET /buildings/{id}/scene?t&layer&walls&primitive&spacing&vx&vy&vz
///   GET /buildings/{id}/live/scene?layer&walls&primitive&spacing&vx&vy&vz
///   GET /buildings/{id}/playback?from&to&speed
///
/// Scenes carry their colour legend in the X-Thermal-Legend header.
class Service {
 public:
  explicit Service(std::vector<Archive> archives, ServiceOptions options = {});
  ~Service();

  HttpResponse handle(const HttpRequest& request);
  std::vector<AccessLogEntry> access_log() const;
  std::vector<std::string> building_ids() const;

  /// Blocks serving on host:port until stop() is called. Port 0 picks a
  /// free port, reported by bound_port() once wait_until_ready() returns.
  void listen(const std::string& host, int port);
  void wait_until_ready() const;
  void stop();
  int bound_port() const { return bound_port_.load(); }

 private:
  HttpResponse route(const HttpRequest& request);
  HttpResponse scene_response(const Archive& archive, const ThermalFrame& frame, const HttpRequest& request) const;
  const Archive& archive(const std::string& id) const;
  ThermalFrame live_frame(const Archive& archive) const;

  std::vector<Archive> archives_;
  ServiceOptions options_;
  double started_ = 0.0;
  mutable std::mutex log_mutex_;
  std::vector<AccessLogEntry> log_;
  std::unique_ptr<httplib::Server> server_;
  std::atomic<int> bound_port_{0};
};

}  // namespace thermomap
