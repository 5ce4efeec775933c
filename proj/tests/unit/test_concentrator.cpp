#include <doctest.h>

#include <atomic>
#include <thread>

#include "thermomap/concentrator.hpp"
#include "thermomap/error.hpp"

using namespace thermomap;

namespace {

// Reads per end-point per healthy cycle: TEMP_LATEST, RH_LATEST, SEQ_LATEST.
constexpr std::uint64_t kReadsPerEndpoint = 3;

std::unique_ptr<Concentrator> make_room(std::size_t n, double period = 1.0) {
  auto dc = std::make_unique<Concentrator>("room", period, 3);
  for (std::size_t i = 0; i < n; ++i) {
    EndpointConfig c;
    c.sensor_id = static_cast<std::uint8_t>(i + 1);
    c.noise = {0, 0};
    c.sample_period = period;
    const double base = 20.0 + static_cast<double>(i);
    dc->add_endpoint("s" + std::to_string(i + 1), c, [base](double t) { return FieldValue{base + t / 10, 50.0}; });
  }
  dc->broadcast_sync(0.0);
  return dc;
}

}  // namespace

TEST_CASE("healthy 16 end-point room returns 16 samples and no misses") {
  auto dc = make_room(16);
  const auto before = dc->link().stats().requests;
  const RoomReading r = dc->poll_cycle(1.0);
  CHECK(r.samples.size() == 16);
  CHECK(r.missing.empty());
  CHECK(r.t == 1.0);
  CHECK(r.samples[2].temp == doctest::Approx(22.1));
  CHECK(dc->link().stats().requests - before == 16 * kReadsPerEndpoint);
  for (const auto& e : dc->roster()) CHECK(dc->link().requests_to(e.address) == kReadsPerEndpoint + 1);
}

TEST_CASE("a dead link shows up as one missing sensor") {
  auto dc = make_room(16);
  dc->link().set_params(5, {0.0, 1.0});
  const RoomReading r = dc->poll_cycle(1.0);
  CHECK(r.samples.size() == 15);
  REQUIRE(r.missing.size() == 1);
  CHECK(r.missing[0] == "s5");
  CHECK(r.samples.size() + r.missing.size() == dc->roster().size());
  // first read timed out, one retry, then the sensor is given up
  CHECK(dc->link().requests_to(5) == 1 + 2);
}

TEST_CASE("60 cycles at 1 Hz give 60 readings with increasing t") {
  auto dc = make_room(4);
  std::vector<double> ts;
  const double horizon = 60.0;
  const auto cycles = static_cast<int>(std::floor(horizon / dc->poll_period()));
  for (int k = 1; k <= cycles; ++k) ts.push_back(dc->poll_cycle(k).t);
  CHECK(ts.size() == 60);
  CHECK(std::is_sorted(ts.begin(), ts.end()));
  CHECK(std::adjacent_find(ts.begin(), ts.end()) == ts.end());
  CHECK(dc->link().within_budget());
}

TEST_CASE("poll time must be aligned and increasing") {
  auto dc = make_room(2, 60.0);
  CHECK_THROWS_AS(dc->poll_cycle(30.0), Error);
  dc->poll_cycle(60.0);
  CHECK_THROWS_AS(dc->poll_cycle(60.0), Error);
  CHECK_NOTHROW(dc->poll_cycle(120.0));
}

TEST_CASE("read-property answers from the cache and never touches end-points") {
  auto dc = make_room(3);
  CHECK(dc->serve_read_property({"room", "latest_cycle", ""}).error == PropertyError::no_data);
  const RoomReading r = dc->poll_cycle(1.0);
  const auto frames = dc->link().stats().requests;
  for (int i = 0; i < 50; ++i) {
    const auto resp = dc->serve_read_property({"room", "latest_cycle", ""});
    REQUIRE(resp.ok());
    REQUIRE(room_reading_from_json(resp.payload) == r);
  }
  const auto s3 = dc->serve_read_property({"room", "sensor_latest", "s3"});
  REQUIRE(s3.ok());
  CHECK(s3.payload.find("\"s3\"") != std::string::npos);
  CHECK(dc->serve_read_property({"room", "bogus", ""}).error == PropertyError::unknown_property);
  CHECK(dc->serve_read_property({"room", "sensor_latest", "s99"}).error == PropertyError::unknown_sensor);
  CHECK(dc->serve_read_property({"other", "latest_cycle", ""}).error == PropertyError::unknown_room);
  CHECK(dc->serve_read_property({"room", "roster", ""}).ok());
  CHECK(dc->serve_read_property({"room", "poll_period", ""}).payload == "1.0");
  CHECK(dc->link().stats().requests == frames);
}

TEST_CASE("uplink frame encoding") {
  const UplinkFrame f{UplinkOp::read_property, "r1", "latest_cycle", "{}"};
  const auto bytes = encode_uplink(f);
  const std::size_t body = 1 + 1 + 1 + 2 + 1 + 12 + 2;
  REQUIRE(bytes.size() == 4 + body);
  CHECK(bytes[0] == 0);
  CHECK(bytes[3] == body);
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0x10);
  CHECK(bytes[6] == 2);
  CHECK(decode_uplink(bytes) == f);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_FALSE(decode_uplink(truncated).has_value());
  PropertyResponse err{"r1", "bogus", PropertyError::unknown_property, ""};
  const UplinkFrame ef = to_frame(err);
  CHECK(ef.op == UplinkOp::error);
  CHECK(ef.payload == std::string("\x00\x01", 2));
  CHECK(response_from_frame(*decode_uplink(encode_uplink(ef))).error == PropertyError::unknown_property);
  CHECK(to_string(PropertyError::unknown_property) == "UNKNOWN_PROPERTY");
}

TEST_CASE("level bus routes by room and reports unknown rooms") {
  auto a = std::make_unique<Concentrator>("a", 1.0);
  auto b = std::make_unique<Concentrator>("b", 1.0);
  EndpointConfig c;
  c.sensor_id = 1;
  a->add_endpoint("a.s1", c, [](double) { return FieldValue{20, 50}; });
  b->add_endpoint("b.s1", c, [](double) { return FieldValue{25, 40}; });
  LevelBus bus(0);
  bus.attach(*a);
  bus.attach(*b);
  a->poll_cycle(1.0);
  b->poll_cycle(1.0);
  const auto ra = bus.read_property({"a", "latest_cycle", ""});
  const auto rb = bus.read_property({"b", "latest_cycle", ""});
  REQUIRE(ra.ok());
  REQUIRE(rb.ok());
  CHECK(room_reading_from_json(ra.payload).room_id == "a");
  CHECK(room_reading_from_json(rb.payload).room_id == "b");
  CHECK(bus.read_property({"zzz", "latest_cycle", ""}).error == PropertyError::unknown_room);
  const std::vector<std::uint8_t> junk{0, 0, 0, 1, 9};
  const auto reply = decode_uplink(bus.transact(junk));
  REQUIRE(reply.has_value());
  CHECK(response_from_frame(*reply).error == PropertyError::malformed);
  CHECK(bus.frame_count() == 4);
}

TEST_CASE("debug tap reads live registers and forces samples") {
  auto dc = make_room(2);
  dc->poll_cycle(1.0);
  auto tap = dc->debug_tap("s2");
  const auto count = tap.read(reg::buffer_count);
  REQUIRE(count.has_value());
  CHECK(*count == 2);  // samples at t = 0 and t = 1
  const auto seq_before = dc->serve_read_property({"room", "sensor_latest", "s2"}).payload;
  CHECK(tap.write(reg::cmd, cmd::sample_now));
  CHECK(*tap.read(reg::buffer_count) == 3);
  dc->poll_cycle(2.0);
  const RoomReading r = *dc->last_cycle();
  CHECK(r.samples[1].seq == 4);
  CHECK_FALSE(tap.read(0xEE).has_value());
  CHECK_THROWS_AS(dc->debug_tap("nope"), Error);
  dc->link().set_params(2, {0.0, 1.0});
  CHECK_THROWS_AS(tap.read(reg::status), Error);
}

TEST_CASE("upstream readers never see a torn snapshot while polling continues") {
  auto dc = make_room(8);
  dc->poll_cycle(1.0);
  std::atomic<bool> stop{false};
  std::atomic<int> bad{0};
  std::thread reader([&] {
    while (!stop) {
      const auto resp = dc->serve_read_property({"room", "latest_cycle", ""});
      const RoomReading r = room_reading_from_json(resp.payload);
      if (r.samples.size() + r.missing.size() != 8) ++bad;
      for (const auto& s : r.samples) {
        if (s.t != r.t) ++bad;
      }
    }
  });
  for (int k = 2; k <= 300; ++k) dc->poll_cycle(k);
  stop = true;
  reader.join();
  CHECK(bad == 0);
}
