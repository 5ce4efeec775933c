#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "thermomap/field.hpp"
#include "thermomap/geometry.hpp"
#include "thermomap/ring_buffer.hpp"

namespace thermomap {

inline constexpr std::size_t kEndpointBufferCapacity = 600;

/// One buffered end-point reading in raw sensor units.
struct SensorRecord {
  std::uint8_t sensor_id = 0;
  std::uint32_t seq = 0;
  double t = 0.0;
  std::uint16_t temp_raw = 0;
  std::uint16_t rh_raw = 0;
  friend bool operator==(const SensorRecord&, const SensorRecord&) = default;
};

using RecordBuffer = RingBuffer<SensorRecord, kEndpointBufferCapacity>;

// Raw encoding: temp_raw = (T + 40.00) * 100, rh_raw = RH * 100.
inline constexpr std::uint16_t kTempRawMax = 16380;
inline constexpr std::uint16_t kRhRawMax = 10000;

struct EncodedSample {
  std::uint16_t temp_raw = 0;
  std::uint16_t rh_raw = 0;
  bool saturated = false;  // input was outside the sensor range and got clamped
};

EncodedSample encode_sample(double temp, double rh);
FieldValue decode_sample(std::uint16_t temp_raw, std::uint16_t rh_raw);
double decode_temp(std::uint16_t temp_raw);
double decode_rh(std::uint16_t rh_raw);

namespace reg {
inline constexpr std::uint16_t device_id = 0x00;
inline constexpr std::uint16_t status = 0x01;
inline constexpr std::uint16_t temp_latest = 0x02;
inline constexpr std::uint16_t rh_latest = 0x03;
inline constexpr std::uint16_t buffer_count = 0x04;
inline constexpr std::uint16_t seq_latest = 0x05;
inline constexpr std::uint16_t cmd = 0x10;
}  // namespace reg

namespace cmd {
inline constexpr std::uint16_t sync = 1;
inline constexpr std::uint16_t sample_now = 2;
}  // namespace cmd

namespace status_bits {
inline constexpr std::uint16_t saturated = 0x01;
inline constexpr std::uint16_t synced = 0x02;
inline constexpr std::uint16_t overflowed = 0x04;
}  // namespace status_bits

// --- register protocol wire frames -------------------------------------------
// request:  [op][sensor_id][addr BE16][val BE16][xor checksum]          7 bytes
// response: [op|0x80][sensor_id][addr BE16][val BE16][status][checksum] 8 bytes

enum class WireOp : std::uint8_t { read = 0x01, write = 0x02 };

inline constexpr std::size_t kRequestFrameSize = 7;
inline constexpr std::size_t kResponseFrameSize = 8;

struct WireRequest {
  WireOp op = WireOp::read;
  std::uint8_t sensor_id = 0;
  std::uint16_t addr = 0;
  std::uint16_t value = 0;
  friend bool operator==(const WireRequest&, const WireRequest&) = default;
};

struct WireResponse {
  WireOp op = WireOp::read;
  std::uint8_t sensor_id = 0;
  std::uint16_t addr = 0;
  std::uint16_t value = 0;
  bool ack = false;
  friend bool operator==(const WireResponse&, const WireResponse&) = default;
};

std::uint8_t xor_checksum(std::span<const std::uint8_t> bytes);
std::array<std::uint8_t, kRequestFrameSize> encode_request(const WireRequest& request);
std::array<std::uint8_t, kResponseFrameSize> encode_response(const WireResponse& response);
/// nullopt on wrong length, unknown op or bad checksum.
std::optional<WireRequest> decode_request(std::span<const std::uint8_t> frame);
std::optional<WireResponse> decode_response(std::span<const std::uint8_t> frame);

struct NoiseModel {
  double sigma_temp = 0.005;  // degrees C
  double sigma_rh = 0.667;    // percent; 3 sigma is about 2 %
};

struct EndpointConfig {
  std::uint8_t sensor_id = 0;
  Vec3 position;
  double sample_period = 1.0;  // seconds
  double phase = 0.0;          // schedule offset from the shared epoch
  NoiseModel noise;
  std::uint64_t noise_seed = 0;
  // Recorded for reference only.
  double battery_voltage = 1.8;
  double power_draw_mw = 3.0;
};

/// Tier-1 sensor node: noisy quantized sampling into a 600-record FIFO plus
/// a register file served over the register protocol.
class Endpoint {
 public:
  using TruthSource = std::function<FieldValue(double t)>;

  explicit Endpoint(EndpointConfig config, TruthSource truth = {});

  /// Samples `truth` at time t (t must not precede the previous sample).
  const SensorRecord& sample_tick(const FieldValue& truth, double t);

  /// Moves the local clock to t, taking every scheduled sample up to t from
  /// the truth source.
  void advance_to(double t);
  double now() const { return now_; }
  double next_sample_time() const;

  /// nullopt is a NACK: undefined address or the write-only CMD register.
  std::optional<std::uint16_t> register_read(std::uint16_t addr) const;
  /// false is a NACK. Only CMD accepts writes.
  bool register_write(std::uint16_t addr, std::uint16_t value);

  /// Serves one request frame; returns an empty vector when the frame is
  /// corrupt (the caller then times out).
  std::vector<std::uint8_t> handle_frame(std::span<const std::uint8_t> frame);

  std::uint8_t id() const { return config_.sensor_id; }
  const EndpointConfig& config() const { return config_; }
  const RecordBuffer& buffer() const { return buffer_; }
  double phase() const { return config_.phase; }

 private:
  double sample_time(std::int64_t k) const { return config_.phase + static_cast<double>(k) * config_.sample_period; }

  EndpointConfig config_;
  TruthSource truth_;
  RecordBuffer buffer_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> unit_normal_{0.0, 1.0};
  std::uint32_t seq_ = 0;
  std::uint16_t status_ = 0;
  double now_ = 0.0;
  std::optional<double> last_sample_t_;
  std::int64_t next_k_ = 0;  // index of the next scheduled sample
};

struct LinkParams {
  double latency = 0.0;           // one-way, virtual seconds
  double loss_probability = 0.0;  // per frame, each direction
};

struct LinkStats {
  std::uint64_t requests = 0;   // request frames put on the link, retries included
  std::uint64_t responses = 0;  // response frames delivered back
  std::uint64_t timeouts = 0;
  std::uint64_t bytes = 0;
};

/// Simulated star link from one concentrator to its end-points. Owns the
/// end-points and accounts frames, bytes and bandwidth per virtual second.
class StarLink {
 public:
  static constexpr double kReadTimeout = 0.1;       // virtual seconds
  static constexpr double kBandwidthBudget = 1e6;   // bits per second

  explicit StarLink(std::uint64_t loss_seed = 0);

  Endpoint& attach(Endpoint endpoint, LinkParams params = {});
  void set_params(std::uint8_t sensor_id, LinkParams params);

  /// One request/response exchange at virtual time t. nullopt on timeout.
  std::optional<WireResponse> transact(const WireRequest& request, double t);

  Endpoint& endpoint(std::uint8_t sensor_id);
  const Endpoint& endpoint(std::uint8_t sensor_id) const;
  bool has_endpoint(std::uint8_t sensor_id) const;
  std::deque<Endpoint>& endpoints() { return endpoints_; }
  const std::deque<Endpoint>& endpoints() const { return endpoints_; }

  const LinkStats& stats() const { return stats_; }
  std::uint64_t requests_to(std::uint8_t sensor_id) const;
  double peak_bits_per_second() const;
  bool within_budget() const { return peak_bits_per_second() < kBandwidthBudget; }

 private:
  std::size_t index_of(std::uint8_t sensor_id) const;
  bool lost(double p);
  void account(double t, std::size_t bytes);

  std::deque<Endpoint> endpoints_;
  std::vector<LinkParams> params_;
  std::vector<std::uint64_t> per_endpoint_requests_;
  LinkStats stats_;
  std::mt19937_64 loss_rng_;
  std::int64_t bucket_second_ = -1;
  std::uint64_t bucket_bits_ = 0;
  std::uint64_t peak_bits_ = 0;
};

}  // namespace thermomap
