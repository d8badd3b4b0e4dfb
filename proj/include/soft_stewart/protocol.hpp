#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace soft_stewart {

/// Bumped on any incompatible change to frame payloads.
inline constexpr int kProtocolVersion = 1;

/// Wire unit: one JSON text message {"type", "seq", "payload"}.
struct Frame {
  std::string type;
  std::uint64_t seq = 0;
  nlohmann::json payload = nlohmann::json::object();

  std::string encode() const;
};

/// Error codes carried by "error" frames.
namespace error_code {
inline constexpr const char* kMalformed = "malformed";
inline constexpr const char* kUnknownType = "unknown_type";
inline constexpr const char* kInvalidPayload = "invalid_payload";
inline constexpr const char* kNotCommander = "not_commander";
inline constexpr const char* kLeaseHeld = "lease_held";
inline constexpr const char* kWrongMode = "wrong_mode";
}  // namespace error_code

struct ProtocolError : std::runtime_error {
  ProtocolError(std::string code, const std::string& message, std::uint64_t seq = 0)
      : std::runtime_error(message), code(std::move(code)), seq(seq) {}
  std::string code;
  std::uint64_t seq;
};

/// Parses and checks the envelope and, for client frames, the payload.
/// Throws ProtocolError.
Frame parse_client_frame(const std::string& text);

enum class ServiceMode { Teleop, Balance, Trace };
const char* to_string(ServiceMode m);
std::optional<ServiceMode> parse_mode(const std::string& s);

struct TeleopCommand {
  std::array<double, 6> axes{};  // clamped to [-1, 1]
};
struct PoseCommand {
  double x = 0, y = 0, z = 0, roll_deg = 0, pitch_deg = 0, yaw_deg = 0;
};
struct DisturbCommand {
  double direction_deg = 0.0;
  double magnitude = 0.0;  // m/s
};
struct ModeCommand {
  ServiceMode mode = ServiceMode::Teleop;
  std::string letters;  // trace only
};

TeleopCommand decode_teleop(const nlohmann::json& payload);
PoseCommand decode_pose(const nlohmann::json& payload);
DisturbCommand decode_disturb(const nlohmann::json& payload);
ModeCommand decode_mode(const nlohmann::json& payload);

}  // namespace soft_stewart
