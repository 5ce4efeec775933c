#include <doctest.h>

#include <httplib.h>

#include <json.hpp>
#include <thread>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "thermomap/error.hpp"
#include "thermomap/service.hpp"
#include "thermomap/simulation.hpp"

using namespace thermomap;
using nlohmann::json;

namespace {

std::vector<Archive> house_store(const std::string& name, double duration = 10) {
  const auto root = fixtures::scratch_dir(name);
  RunConfig cfg;
  cfg.config_text = fixtures::config("residential.json");
  cfg.duration = duration;
  cfg.out_dir = root / "house";
  run_simulation(cfg);
  return open_store(root);
}

HttpResponse get(Service& s, const std::string& path, std::map<std::string, std::string> query = {}) {
  return s.handle({"GET", path, std::move(query)});
}

}  // namespace

TEST_CASE("building list and frame ranges") {
  Service s(house_store("svc_frames"));
  const auto ids = get(s, "/buildings");
  CHECK(ids.status == 200);
  CHECK(json::parse(ids.body) == json::array({"house"}));
  const auto all = json::parse(get(s, "/buildings/house/frames").body);
  CHECK(all.size() == 10);
  const auto window = json::parse(get(s, "/buildings/house/frames", {{"from", "3"}, {"to", "5"}}).body);
  REQUIRE(window.size() == 3);
  CHECK(window[0]["t"] == 3.0);
  CHECK(window[2]["t"] == 5.0);
  CHECK(json::parse(get(s, "/buildings/house/frames", {{"from", "100"}}).body).empty());
}

TEST_CASE("scene endpoint returns X3D with legend headers") {
  Service s(house_store("svc_scene"));
  const auto r = get(s, "/buildings/house/scene", {{"t", "4.5"}, {"primitive", "box"}});
  REQUIRE(r.status == 200);
  CHECK(r.content_type == "model/x3d+xml");
  CHECK(r.headers.at("X-Frame-Time") == "4");
  const auto legend = json::parse(r.headers.at("X-Thermal-Legend"));
  CHECK(legend["layer"] == "temperature");
  CHECK(legend["units"] == "degC");
  const auto xml = oracle::parse_xml(r.body);
  CHECK(xml.name == "X3D");
  CHECK(oracle::count_named(xml, "Box") > 0);
  CHECK(std::stoul(r.headers.at("X-Nominal-Polygons")) > 0);

  const auto latest = get(s, "/buildings/house/scene", {{"layer", "humidity"}, {"walls", "wireframe"}});
  REQUIRE(latest.status == 200);
  CHECK(latest.headers.at("X-Frame-Time") == "10");
  CHECK(json::parse(latest.headers.at("X-Thermal-Legend"))["units"] == "%RH");

  const auto far = get(s, "/buildings/house/scene", {{"vx", "500"}, {"vy", "0"}, {"vz", "0"}});
  REQUIRE(far.status == 200);
  CHECK(far.headers.at("X-Nominal-Polygons") == "0");
}

TEST_CASE("playback plan") {
  Service s(house_store("svc_playback"));
  const auto r = get(s, "/buildings/house/playback", {{"from", "2"}, {"to", "6"}, {"speed", "2"}});
  REQUIRE(r.status == 200);
  const auto plan = json::parse(r.body);
  CHECK(plan["speed"] == 2.0);
  REQUIRE(plan["frames"].size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(plan["frames"][i]["t"] == 2.0 + static_cast<double>(i));
    CHECK(plan["frames"][i]["presentation_time"] == doctest::Approx(0.5 * static_cast<double>(i)));
  }
  CHECK(plan["frames"][0]["url"] == "/buildings/house/scene?t=2");
  const auto whole = json::parse(get(s, "/buildings/house/playback").body);
  CHECK(whole["frames"].size() == 10);
  CHECK(whole["t0"] == 1.0);
}

TEST_CASE("errors map to status codes and JSON bodies") {
  Service s(house_store("svc_errors"));
  const auto unknown = get(s, "/buildings/nope/frames");
  CHECK(unknown.status == 404);
  CHECK(json::parse(unknown.body)["error"] == "UNKNOWN_BUILDING");
  CHECK(get(s, "/nothing").status == 404);
  CHECK(get(s, "/buildings/house/bogus").status == 404);
  CHECK(get(s, "/buildings/house/frames", {{"from", "abc"}}).status == 400);
  CHECK(get(s, "/buildings/house/frames", {{"from", "9"}, {"to", "2"}}).status == 400);
  CHECK(get(s, "/buildings/house/scene", {{"vx", "1"}}).status == 400);
  CHECK(get(s, "/buildings/house/scene", {{"primitive", "cone"}}).status == 400);
  const auto before = get(s, "/buildings/house/scene", {{"t", "0.5"}});
  CHECK(before.status == 404);
  CHECK(json::parse(before.body)["error"] == "NO_FRAMES");
  const auto empty = get(s, "/buildings/house/playback", {{"from", "100"}, {"to", "200"}});
  CHECK(empty.status == 404);
  CHECK(json::parse(empty.body)["error"] == "EMPTY_RANGE");
  CHECK(get(s, "/buildings/house/playback", {{"speed", "0"}}).status == 400);
  CHECK(s.handle({"POST", "/buildings", {}}).status == 405);
  CHECK(s.handle({"DELETE", "/buildings/house/frames", {}}).status == 405);
  const auto log = s.access_log();
  CHECK(log.size() == 12);
  CHECK(log.back().status == 405);
}

TEST_CASE("live scene replays the archive at the configured speed") {
  double now = 0;
  ServiceOptions o;
  o.live_speed = 2.0;
  o.wall_clock = [&now] { return now; };
  Service s(house_store("svc_live"), o);
  CHECK(get(s, "/buildings/house/live/scene").headers.at("X-Frame-Time") == "1");
  now = 2.2;
  CHECK(get(s, "/buildings/house/live/scene").headers.at("X-Frame-Time") == "5");
  now = 100;
  CHECK(get(s, "/buildings/house/live/scene").headers.at("X-Frame-Time") == "10");
  Service latest(house_store("svc_live_latest"));
  CHECK(get(latest, "/buildings/house/live/scene").headers.at("X-Frame-Time") == "10");
  ServiceOptions bad;
  bad.live_speed = 0.0;
  CHECK_THROWS_AS(Service(std::vector<Archive>{}, bad), thermomap::Error);
}

TEST_CASE("HTTP server on an ephemeral port") {
  Service s(house_store("svc_http", 5));
  std::thread server([&] { s.listen("127.0.0.1", 0); });
  s.wait_until_ready();
  REQUIRE(s.bound_port() > 0);
  httplib::Client client("127.0.0.1", s.bound_port());
  const auto ids = client.Get("/buildings");
  REQUIRE(ids);
  CHECK(ids->status == 200);
  CHECK(ids->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(json::parse(ids->body) == json::array({"house"}));
  const auto scene = client.Get("/buildings/house/scene?t=3&primitive=tetra");
  REQUIRE(scene);
  CHECK(scene->status == 200);
  CHECK(scene->get_header_value("Content-Type") == "model/x3d+xml");
  CHECK(scene->get_header_value("X-Frame-Time") == "3");
  CHECK(oracle::parse_xml(scene->body).name == "X3D");
  const auto missing = client.Get("/buildings/zzz/scene");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  const auto post = client.Post("/buildings", "{}", "application/json");
  REQUIRE(post);
  CHECK(post->status == 405);
  s.stop();
  server.join();
}
