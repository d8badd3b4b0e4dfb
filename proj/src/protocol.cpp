#include "soft_stewart/protocol.hpp"

#include <algorithm>
#include <cmath>

#include "soft_stewart/paths.hpp"

namespace soft_stewart {

namespace {

double number_field(const nlohmann::json& p, const char* key, std::uint64_t seq) {
  if (!p.contains(key)) throw ProtocolError(error_code::kInvalidPayload, std::string("missing field '") + key + "'", seq);
  const auto& v = p.at(key);
  if (!v.is_number() || !std::isfinite(v.get<double>()))
    throw ProtocolError(error_code::kInvalidPayload, std::string("field '") + key + "' must be a finite number", seq);
  return v.get<double>();
}

void only_keys(const nlohmann::json& p, std::initializer_list<const char*> keys, std::uint64_t seq) {
  for (const auto& [k, v] : p.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
      throw ProtocolError(error_code::kInvalidPayload, "unexpected field '" + k + "'", seq);
  }
}

}  // namespace

std::string Frame::encode() const {
  nlohmann::json j;
  j["type"] = type;
  j["seq"] = seq;
  j["payload"] = payload;
  return j.dump();
}

const char* to_string(ServiceMode m) {
  switch (m) {
    case ServiceMode::Teleop: return "teleop";
    case ServiceMode::Balance: return "balance";
    case ServiceMode::Trace: return "trace";
  }
  return "teleop";
}

std::optional<ServiceMode> parse_mode(const std::string& s) {
  if (s == "teleop") return ServiceMode::Teleop;
  if (s == "balance") return ServiceMode::Balance;
  if (s == "trace") return ServiceMode::Trace;
  return std::nullopt;
}

TeleopCommand decode_teleop(const nlohmann::json& p) {
  only_keys(p, {"axes"}, 0);
  if (!p.contains("axes") || !p.at("axes").is_array() || p.at("axes").size() != 6)
    throw ProtocolError(error_code::kInvalidPayload, "teleop needs 'axes': six numbers");
  TeleopCommand c;
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& v = p.at("axes")[i];
    if (!v.is_number() || !std::isfinite(v.get<double>()))
      throw ProtocolError(error_code::kInvalidPayload, "teleop axes must be finite numbers");
    c.axes[i] = std::clamp(v.get<double>(), -1.0, 1.0);
  }
  return c;
}

PoseCommand decode_pose(const nlohmann::json& p) {
  only_keys(p, {"x", "y", "z", "roll_deg", "pitch_deg", "yaw_deg"}, 0);
  return {number_field(p, "x", 0),        number_field(p, "y", 0),         number_field(p, "z", 0),
          number_field(p, "roll_deg", 0), number_field(p, "pitch_deg", 0), number_field(p, "yaw_deg", 0)};
}

DisturbCommand decode_disturb(const nlohmann::json& p) {
  only_keys(p, {"direction_deg", "magnitude"}, 0);
  DisturbCommand c{number_field(p, "direction_deg", 0), number_field(p, "magnitude", 0)};
  if (c.magnitude < 0.0 || c.magnitude > 2.0)
    throw ProtocolError(error_code::kInvalidPayload, "disturbance magnitude must lie in [0, 2] m/s");
  return c;
}

ModeCommand decode_mode(const nlohmann::json& p) {
  only_keys(p, {"mode", "letters"}, 0);
  if (!p.contains("mode") || !p.at("mode").is_string())
    throw ProtocolError(error_code::kInvalidPayload, "mode needs a 'mode' string");
  const auto m = parse_mode(p.at("mode").get<std::string>());
  if (!m) throw ProtocolError(error_code::kInvalidPayload, "mode must be teleop, balance or trace");
  ModeCommand c;
  c.mode = *m;
  if (p.contains("letters")) {
    if (!p.at("letters").is_string()) throw ProtocolError(error_code::kInvalidPayload, "'letters' must be a string");
    c.letters = traceable_letters(p.at("letters").get<std::string>());
  }
  if (c.mode == ServiceMode::Trace) {
    if (c.letters.empty()) throw ProtocolError(error_code::kInvalidPayload, "trace mode needs 'letters'");
    for (char ch : c.letters)
      if (!letter_supported(ch))
        throw ProtocolError(error_code::kInvalidPayload, std::string("unsupported letter '") + ch + "'");
  }
  return c;
}

Frame parse_client_frame(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(error_code::kMalformed, std::string("not JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError(error_code::kMalformed, "frame must be an object");
  std::uint64_t seq = 0;
  if (j.contains("seq") && j.at("seq").is_number_unsigned()) seq = j.at("seq").get<std::uint64_t>();
  if (!j.contains("type") || !j.at("type").is_string())
    throw ProtocolError(error_code::kMalformed, "frame needs a string 'type'", seq);
  if (!j.contains("seq") || !j.at("seq").is_number_unsigned())
    throw ProtocolError(error_code::kMalformed, "frame needs a non-negative integer 'seq'", seq);
  for (const auto& [k, v] : j.items())
    if (k != "type" && k != "seq" && k != "payload")
      throw ProtocolError(error_code::kMalformed, "unexpected top-level field '" + k + "'", seq);
  Frame f;
  f.type = j.at("type").get<std::string>();
  f.seq = seq;
  if (j.contains("payload")) {
    if (!j.at("payload").is_object()) throw ProtocolError(error_code::kMalformed, "'payload' must be an object", seq);
    f.payload = j.at("payload");
  }
  try {
    if (f.type == "teleop")
      decode_teleop(f.payload);
    else if (f.type == "pose")
      decode_pose(f.payload);
    else if (f.type == "disturb")
      decode_disturb(f.payload);
    else if (f.type == "mode")
      decode_mode(f.payload);
    else if (f.type == "acquire_lease" || f.type == "release_lease" || f.type == "ping")
      only_keys(f.payload, {}, seq);
    else
      throw ProtocolError(error_code::kUnknownType, "unknown frame type '" + f.type + "'", seq);
  } catch (const ProtocolError& e) {
    throw ProtocolError(e.code, e.what(), seq);
  }
  return f;
}

}  // namespace soft_stewart
