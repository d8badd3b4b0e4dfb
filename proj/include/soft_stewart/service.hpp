#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "soft_stewart/cascade.hpp"
#include "soft_stewart/config.hpp"
#include "soft_stewart/protocol.hpp"
#include "soft_stewart/teleop.hpp"

namespace soft_stewart {

using ClientId = std::uint64_t;

struct Outgoing {
  ClientId client = 0;
  std::string text;
  /// Telemetry may be dropped for a lagging viewer; replies may not.
  bool droppable = false;
};

/// Simulation and command handling behind the socket, with no I/O of its
/// own. One owner calls every method; time only moves in advance().
class ServiceCore {
 public:
  ServiceCore(const ExperimentConfig& cfg, std::uint64_t seed);
  ~ServiceCore();

  ClientId connect();
  void disconnect(ClientId id);
  void receive(ClientId id, const std::string& text);
  /// Steps the simulation by `seconds` (rounded to whole plant steps) and
  /// emits telemetry at the configured rate.
  void advance(double seconds);
  std::vector<Outgoing> drain();

  double time() const { return time_; }
  ServiceMode mode() const { return mode_; }
  std::optional<ClientId> commander() const { return commander_; }
  std::uint64_t commands_applied() const { return applied_; }
  std::uint64_t commands_dropped() const { return dropped_; }
  /// Current telemetry payload (what the next telemetry frame will carry).
  nlohmann::json telemetry() const;

 private:
  void send(ClientId id, const std::string& type, nlohmann::json payload, bool droppable = false);
  void send_error(ClientId id, const std::string& code, const std::string& message, std::uint64_t ref);
  void send_rejected(ClientId id, const std::string& code, const std::string& message, std::uint64_t ref);
  void handle(ClientId id, const Frame& f);
  bool rate_ok();
  void expire_lease();
  void switch_mode(const ModeCommand& m);
  void step_once();

  ExperimentConfig cfg_;
  std::uint64_t seed_;
  double dt_;
  double time_ = 0.0;
  long steps_ = 0;
  double next_telemetry_ = 0.0;
  ServiceMode mode_ = ServiceMode::Teleop;

  // Teleop: pose target through rigid IK onto a bare plant.
  std::unique_ptr<Plant> plant_;
  PoseRateLimiter limiter_;
  Pose6 teleop_target_;
  JointVector teleop_command_;

  // Balance and trace.
  std::unique_ptr<BalanceLoop> loop_;
  Path path_;
  std::string letters_;
  std::size_t letter_index_ = 0;
  double trace_start_ = 0.0;
  std::uint64_t mode_switches_ = 0;

  std::map<ClientId, std::uint64_t> clients_;  // id -> next outgoing seq
  ClientId next_client_ = 1;
  std::optional<ClientId> commander_;
  double lease_expires_ = 0.0;
  double last_applied_ = -1e9;
  std::uint64_t applied_ = 0;
  std::uint64_t dropped_ = 0;
  std::vector<Outgoing> out_;
};

/// WebSocket front end. One thread runs the io_context: the simulation
/// timer and every connection handler share it and talk only by posting.
class WebSocketServer {
 public:
  WebSocketServer(const ExperimentConfig& cfg, std::uint64_t seed);
  ~WebSocketServer();

  /// Binds and listens; returns the bound port (useful with port 0).
  unsigned short listen();
  /// Runs until stop(), SIGINT or SIGTERM. Paces the simulation against the
  /// wall clock.
  void run();
  /// Safe from any thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace soft_stewart
