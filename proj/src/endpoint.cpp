#include "thermomap/endpoint.hpp"

#include <algorithm>
#include <cmath>

#include "thermomap/error.hpp"

namespace thermomap {

namespace {

constexpr double kScheduleEps = 1e-9;

void put_be16(std::uint8_t* out, std::uint16_t v) {
  out[0] = static_cast<std::uint8_t>(v >> 8);
  out[1] = static_cast<std::uint8_t>(v & 0xFF);
}

std::uint16_t get_be16(const std::uint8_t* in) {
  return static_cast<std::uint16_t>((in[0] << 8) | in[1]);
}

bool valid_op(std::uint8_t op) {
  return op == static_cast<std::uint8_t>(WireOp::read) || op == static_cast<std::uint8_t>(WireOp::write);
}

}  // namespace

EncodedSample encode_sample(double temp, double rh) {
  EncodedSample out;
  if (!(temp >= kSensorTempMin && temp <= kSensorTempMax)) out.saturated = true;
  if (!(rh >= 0.0 && rh <= 100.0)) out.saturated = true;
  const double t = std::isnan(temp) ? kSensorTempMin : std::clamp(temp, kSensorTempMin, kSensorTempMax);
  const double h = std::isnan(rh) ? 0.0 : std::clamp(rh, 0.0, 100.0);
  out.temp_raw = static_cast<std::uint16_t>(std::min<long>(std::lround((t + 40.0) * 100.0), kTempRawMax));
  out.rh_raw = static_cast<std::uint16_t>(std::min<long>(std::lround(h * 100.0), kRhRawMax));
  return out;
}

double decode_temp(std::uint16_t temp_raw) { return static_cast<double>(temp_raw) / 100.0 - 40.0; }
double decode_rh(std::uint16_t rh_raw) { return static_cast<double>(rh_raw) / 100.0; }

FieldValue decode_sample(std::uint16_t temp_raw, std::uint16_t rh_raw) {
  return {decode_temp(temp_raw), decode_rh(rh_raw)};
}

std::uint8_t xor_checksum(std::span<const std::uint8_t> bytes) {
  std::uint8_t c = 0;
  for (std::uint8_t b : bytes) c ^= b;
  return c;
}

std::array<std::uint8_t, kRequestFrameSize> encode_request(const WireRequest& request) {
  std::array<std::uint8_t, kRequestFrameSize> f{};
  f[0] = static_cast<std::uint8_t>(request.op);
  f[1] = request.sensor_id;
  put_be16(&f[2], request.addr);
  put_be16(&f[4], request.value);
  f[6] = xor_checksum(std::span(f).first(6));
  return f;
}

std::array<std::uint8_t, kResponseFrameSize> encode_response(const WireResponse& response) {
  std::array<std::uint8_t, kResponseFrameSize> f{};
  f[0] = static_cast<std::uint8_t>(static_cast<std::uint8_t>(response.op) | 0x80);
  f[1] = response.sensor_id;
  put_be16(&f[2], response.addr);
  put_be16(&f[4], response.value);
  f[6] = response.ack ? 0 : 1;
  f[7] = xor_checksum(std::span(f).first(7));
  return f;
}

std::optional<WireRequest> decode_request(std::span<const std::uint8_t> frame) {
  if (frame.size() != kRequestFrameSize) return std::nullopt;
  if (xor_checksum(frame.first(6)) != frame[6] || !valid_op(frame[0])) return std::nullopt;
  return WireRequest{static_cast<WireOp>(frame[0]), frame[1], get_be16(&frame[2]), get_be16(&frame[4])};
}

std::optional<WireResponse> decode_response(std::span<const std::uint8_t> frame) {
  if (frame.size() != kResponseFrameSize) return std::nullopt;
  if (xor_checksum(frame.first(7)) != frame[7]) return std::nullopt;
  if ((frame[0] & 0x80) == 0 || !valid_op(frame[0] & 0x7F) || frame[6] > 1) return std::nullopt;
  return WireResponse{static_cast<WireOp>(frame[0] & 0x7F), frame[1], get_be16(&frame[2]), get_be16(&frame[4]),
                      frame[6] == 0};
}

Endpoint::Endpoint(EndpointConfig config, TruthSource truth)
    : config_(config), truth_(std::move(truth)), rng_(config.noise_seed) {
  if (!(config_.sample_period > 0.0)) throw Error(Errc::invalid_argument, "end-point sample period must be > 0");
  next_k_ = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(-config_.phase / config_.sample_period)));
}

const SensorRecord& Endpoint::sample_tick(const FieldValue& truth, double t) {
  if (last_sample_t_ && t < *last_sample_t_) {
    throw Error(Errc::invalid_argument, "sample_tick: virtual clock moved backwards");
  }
  double temp = truth.temp;
  double rh = truth.rh;
  if (config_.noise.sigma_temp > 0.0) temp += config_.noise.sigma_temp * unit_normal_(rng_);
  if (config_.noise.sigma_rh > 0.0) rh += config_.noise.sigma_rh * unit_normal_(rng_);
  const EncodedSample enc = encode_sample(temp, rh);
  if (enc.saturated) {
    status_ |= status_bits::saturated;
  } else {
    status_ &= static_cast<std::uint16_t>(~status_bits::saturated);
  }
  if (buffer_.full()) status_ |= status_bits::overflowed;
  buffer_.push({config_.sensor_id, ++seq_, t, enc.temp_raw, enc.rh_raw});
  last_sample_t_ = t;
  now_ = std::max(now_, t);
  return buffer_.newest();
}

double Endpoint::next_sample_time() const { return sample_time(next_k_); }

void Endpoint::advance_to(double t) {
  while (sample_time(next_k_) <= t + kScheduleEps) {
    const double ts = sample_time(next_k_);
    if (truth_ && !(last_sample_t_ && ts < *last_sample_t_)) sample_tick(truth_(ts), ts);
    ++next_k_;
  }
  now_ = std::max(now_, t);
}

std::optional<std::uint16_t> Endpoint::register_read(std::uint16_t addr) const {
  const bool has = !buffer_.empty();
  switch (addr) {
    case reg::device_id: return config_.sensor_id;
    case reg::status: return status_;
    case reg::temp_latest: return has ? buffer_.newest().temp_raw : std::uint16_t{0};
    case reg::rh_latest: return has ? buffer_.newest().rh_raw : std::uint16_t{0};
    case reg::buffer_count: return static_cast<std::uint16_t>(buffer_.size());
    case reg::seq_latest:
      // Wraps within 1..65535 so that 0 always means "no sample yet".
      return static_cast<std::uint16_t>(seq_ == 0 ? 0 : (seq_ - 1) % 0xFFFF + 1);
    default: return std::nullopt;
  }
}

bool Endpoint::register_write(std::uint16_t addr, std::uint16_t value) {
  if (addr != reg::cmd) return false;
  switch (value) {
    case cmd::sync: {
      // Re-anchor the schedule on the shared epoch; the next sample is the
      // first epoch-aligned instant at or after now that follows the last sample.
      config_.phase = 0.0;
      next_k_ = static_cast<std::int64_t>(std::ceil(now_ / config_.sample_period - kScheduleEps));
      if (last_sample_t_ && sample_time(next_k_) <= *last_sample_t_ + kScheduleEps) ++next_k_;
      status_ |= status_bits::synced;
      return true;
    }
    case cmd::sample_now:
      if (!truth_) return false;
      sample_tick(truth_(now_), now_);
      return true;
    default: return false;
  }
}

std::vector<std::uint8_t> Endpoint::handle_frame(std::span<const std::uint8_t> frame) {
  const auto request = decode_request(frame);
  if (!request || request->sensor_id != config_.sensor_id) return {};
  WireResponse response{request->op, request->sensor_id, request->addr, 0, false};
  if (request->op == WireOp::read) {
    if (const auto v = register_read(request->addr)) {
      response.value = *v;
      response.ack = true;
    }
  } else {
    response.value = request->value;
    response.ack = register_write(request->addr, request->value);
  }
  const auto bytes = encode_response(response);
  return {bytes.begin(), bytes.end()};
}

StarLink::StarLink(std::uint64_t loss_seed) : loss_rng_(loss_seed) {}

Endpoint& StarLink::attach(Endpoint endpoint, LinkParams params) {
  if (has_endpoint(endpoint.id())) {
    throw Error(Errc::invariant_violation, "end-point id " + std::to_string(endpoint.id()) + " already attached");
  }
  endpoints_.push_back(std::move(endpoint));
  params_.push_back(params);
  per_endpoint_requests_.push_back(0);
  return endpoints_.back();
}

std::size_t StarLink::index_of(std::uint8_t sensor_id) const {
  for (std::size_t i = 0; i < endpoints_.size(); ++i) {
    if (endpoints_[i].id() == sensor_id) return i;
  }
  throw Error(Errc::unknown_sensor, "no end-point with id " + std::to_string(sensor_id) + " on this link");
}

bool StarLink::has_endpoint(std::uint8_t sensor_id) const {
  return std::any_of(endpoints_.begin(), endpoints_.end(), [&](const Endpoint& e) { return e.id() == sensor_id; });
}

void StarLink::set_params(std::uint8_t sensor_id, LinkParams params) { params_[index_of(sensor_id)] = params; }

Endpoint& StarLink::endpoint(std::uint8_t sensor_id) { return endpoints_[index_of(sensor_id)]; }
const Endpoint& StarLink::endpoint(std::uint8_t sensor_id) const { return endpoints_[index_of(sensor_id)]; }

std::uint64_t StarLink::requests_to(std::uint8_t sensor_id) const {
  return per_endpoint_requests_[index_of(sensor_id)];
}

bool StarLink::lost(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(loss_rng_) < p;
}

void StarLink::account(double t, std::size_t bytes) {
  stats_.bytes += bytes;
  const auto second = static_cast<std::int64_t>(std::floor(t));
  if (second != bucket_second_) {
    bucket_second_ = second;
    bucket_bits_ = 0;
  }
  bucket_bits_ += bytes * 8;
  peak_bits_ = std::max(peak_bits_, bucket_bits_);
}

double StarLink::peak_bits_per_second() const { return static_cast<double>(peak_bits_); }

std::optional<WireResponse> StarLink::transact(const WireRequest& request, double t) {
  const std::size_t i = index_of(request.sensor_id);
  const LinkParams& p = params_[i];
  ++stats_.requests;
  ++per_endpoint_requests_[i];
  const auto frame = encode_request(request);
  account(t, frame.size());
  if (lost(p.loss_probability) || 2.0 * p.latency > kReadTimeout) {
    ++stats_.timeouts;
    return std::nullopt;
  }
  Endpoint& ep = endpoints_[i];
  ep.advance_to(t + p.latency);
  const auto reply = ep.handle_frame(frame);
  if (reply.empty() || lost(p.loss_probability)) {
    ++stats_.timeouts;
    return std::nullopt;
  }
  account(t + 2.0 * p.latency, reply.size());
  ++stats_.responses;
  return decode_response(reply);
}

}  // namespace thermomap
