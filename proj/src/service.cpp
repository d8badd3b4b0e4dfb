#include "soft_stewart/service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <iostream>
#include <mutex>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "soft_stewart/run.hpp"

namespace soft_stewart {

namespace {

nlohmann::json pose_json(const Pose6& p) {
  return {{"x", p.x},
          {"y", p.y},
          {"z", p.z},
          {"roll_deg", rad2deg(p.roll)},
          {"pitch_deg", rad2deg(p.pitch)},
          {"yaw_deg", rad2deg(p.yaw)}};
}

int level_rank(const std::string& level) {
  if (level == "debug") return 0;
  if (level == "info") return 1;
  if (level == "warn") return 2;
  if (level == "error") return 3;
  return 1;
}

}  // namespace

ServiceCore::ServiceCore(const ExperimentConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), seed_(seed), dt_(cfg.plant.dt()) {
  cfg_.validate();
  switch_mode(ModeCommand{ServiceMode::Teleop, {}});
}

ServiceCore::~ServiceCore() = default;

ClientId ServiceCore::connect() {
  const ClientId id = next_client_++;
  clients_[id] = 0;
  send(id, "hello",
       {{"protocol_version", kProtocolVersion},
        {"client_id", id},
        {"telemetry_hz", cfg_.serve.telemetry_hz},
        {"command_hz", cfg_.serve.command_hz},
        {"lease_timeout", cfg_.serve.lease_timeout},
        {"mode", to_string(mode_)},
        {"commander_present", commander_.has_value()}});
  return id;
}

void ServiceCore::disconnect(ClientId id) {
  clients_.erase(id);
  out_.erase(std::remove_if(out_.begin(), out_.end(), [id](const Outgoing& o) { return o.client == id; }), out_.end());
  if (commander_ == id) commander_.reset();
}

void ServiceCore::send(ClientId id, const std::string& type, nlohmann::json payload, bool droppable) {
  auto it = clients_.find(id);
  if (it == clients_.end()) return;
  Frame f{type, it->second++, std::move(payload)};
  out_.push_back({id, f.encode(), droppable});
}

void ServiceCore::send_error(ClientId id, const std::string& code, const std::string& message, std::uint64_t ref) {
  send(id, "error", {{"code", code}, {"message", message}, {"ref_seq", ref}});
}

void ServiceCore::send_rejected(ClientId id, const std::string& code, const std::string& message, std::uint64_t ref) {
  send(id, "rejected", {{"code", code}, {"message", message}, {"ref_seq", ref}});
}

std::vector<Outgoing> ServiceCore::drain() {
  std::vector<Outgoing> v;
  v.swap(out_);
  return v;
}

void ServiceCore::receive(ClientId id, const std::string& text) {
  if (!clients_.count(id)) return;
  Frame f;
  try {
    f = parse_client_frame(text);
  } catch (const ProtocolError& e) {
    send_error(id, e.code, e.what(), e.seq);
    return;
  }
  try {
    handle(id, f);
  } catch (const ProtocolError& e) {
    send_error(id, e.code, e.what(), f.seq);
  }
}

bool ServiceCore::rate_ok() {
  if (time_ - last_applied_ < 1.0 / cfg_.serve.command_hz - 1e-9) return false;
  last_applied_ = time_;
  return true;
}

void ServiceCore::expire_lease() {
  if (commander_ && time_ >= lease_expires_) {
    const ClientId old = *commander_;
    commander_.reset();
    send(old, "lease", {{"holder", false}, {"reason", "expired"}});
  }
}

void ServiceCore::handle(ClientId id, const Frame& f) {
  if (f.type == "ping") {
    send(id, "pong", {{"ref_seq", f.seq}, {"t", time_}});
    return;
  }
  if (f.type == "acquire_lease") {
    if (commander_ && *commander_ != id) {
      send_rejected(id, error_code::kLeaseHeld, "another client holds the commander lease", f.seq);
      return;
    }
    commander_ = id;
    lease_expires_ = time_ + cfg_.serve.lease_timeout;
    send(id, "lease", {{"holder", true}, {"reason", "granted"}, {"ref_seq", f.seq}});
    return;
  }
  if (f.type == "release_lease") {
    if (commander_ == id) commander_.reset();
    send(id, "lease", {{"holder", false}, {"reason", "released"}, {"ref_seq", f.seq}});
    return;
  }
  if (commander_ != id) {
    send_rejected(id, error_code::kNotCommander, "commands need the commander lease", f.seq);
    return;
  }
  lease_expires_ = time_ + cfg_.serve.lease_timeout;

  if (f.type == "teleop" || f.type == "pose") {
    if (mode_ != ServiceMode::Teleop) throw ProtocolError(error_code::kWrongMode, "pose commands need teleop mode");
    if (!rate_ok()) {
      ++dropped_;
      return;
    }
    ++applied_;
    if (f.type == "teleop") {
      teleop_target_ = teleop_map(decode_teleop(f.payload).axes);
    } else {
      const PoseCommand p = decode_pose(f.payload);
      teleop_target_ = Pose6{p.x, p.y, p.z, deg2rad(p.roll_deg), deg2rad(p.pitch_deg), deg2rad(p.yaw_deg)};
    }
    return;
  }
  if (f.type == "disturb") {
    if (!loop_) throw ProtocolError(error_code::kWrongMode, "disturbances need balance or trace mode");
    const DisturbCommand d = decode_disturb(f.payload);
    const double a = deg2rad(d.direction_deg);
    loop_->apply_impulse(d.magnitude * Eigen::Vector2d(std::cos(a), std::sin(a)));
    ++applied_;
    send(id, "ack", {{"ref_seq", f.seq}, {"type", f.type}});
    return;
  }
  if (f.type == "mode") {
    switch_mode(decode_mode(f.payload));
    ++applied_;
    send(id, "ack", {{"ref_seq", f.seq}, {"type", f.type}});
    return;
  }
  throw ProtocolError(error_code::kUnknownType, "unknown frame type '" + f.type + "'");
}

void ServiceCore::switch_mode(const ModeCommand& m) {
  mode_ = m.mode;
  const std::uint64_t s = derive_seed(seed_, mode_switches_++);
  plant_.reset();
  loop_.reset();
  path_.clear();
  letters_.clear();
  letter_index_ = 0;
  switch (m.mode) {
    case ServiceMode::Teleop: {
      plant_ = std::make_unique<Plant>(cfg_.plant);
      teleop_target_ = teleop_map({});
      limiter_.reset(teleop_target_);
      teleop_command_ = lengths_to_joints(inverse_kinematics(teleop_target_, cfg_.plant.geometry), cfg_.plant.geometry);
      plant_->reset(teleop_command_);
      break;
    }
    case ServiceMode::Balance:
      loop_ = std::make_unique<BalanceLoop>(cfg_.balance(BallMode::RollingBall), s);
      break;
    case ServiceMode::Trace:
      letters_ = m.letters;
      path_ = letter_path(letters_.front());
      loop_ = std::make_unique<BalanceLoop>(cfg_.balance(BallMode::FrictionPuck), s);
      loop_->reset(path_.front());
      trace_start_ = time_;
      break;
  }
}

void ServiceCore::step_once() {
  expire_lease();
  if (mode_ == ServiceMode::Teleop) {
    const Pose6& p = limiter_.step(teleop_target_, dt_);
    teleop_command_ = lengths_to_joints(inverse_kinematics(p, cfg_.plant.geometry), cfg_.plant.geometry);
    plant_->step(teleop_command_, dt_);
  } else if (mode_ == ServiceMode::Balance) {
    loop_->step(Waypoint::Zero());
  } else {
    const double dwell = cfg_.puck_cascade.waypoint_dwell;
    double t = time_ - trace_start_;
    while (t >= static_cast<double>(path_.size()) * dwell && letter_index_ + 1 < letters_.size()) {
      trace_start_ += static_cast<double>(path_.size()) * dwell;
      path_ = letter_path(letters_[++letter_index_]);
      t = time_ - trace_start_;
    }
    loop_->step(waypoint_sequencer(path_, t, dwell));
  }
  time_ += dt_;
  ++steps_;
}

void ServiceCore::advance(double seconds) {
  const long n = std::lround(seconds / dt_);
  for (long i = 0; i < n; ++i) {
    step_once();
    if (time_ + 1e-9 >= next_telemetry_) {
      next_telemetry_ += 1.0 / cfg_.serve.telemetry_hz;
      if (next_telemetry_ < time_) next_telemetry_ = time_ + 1.0 / cfg_.serve.telemetry_hz;
      const nlohmann::json payload = telemetry();
      for (const auto& [id, seq] : clients_) send(id, "telemetry", payload, true);
    }
  }
}

nlohmann::json ServiceCore::telemetry() const {
  const Plant& plant = loop_ ? loop_->plant() : *plant_;
  const PlantState& st = plant.state();
  nlohmann::json j;
  j["schema_version"] = kProtocolVersion;
  j["t"] = time_;
  j["mode"] = to_string(mode_);
  j["object"] = mode_ == ServiceMode::Balance ? "ball" : mode_ == ServiceMode::Trace ? "puck" : "none";
  j["pose"] = pose_json(st.pose);
  j["target_pose"] = mode_ == ServiceMode::Teleop ? pose_json(teleop_target_) : nlohmann::json(nullptr);
  std::vector<double> cmd(st.commanded.deg.begin(), st.commanded.deg.end());
  std::vector<double> actual(st.joints_deg.begin(), st.joints_deg.end());
  std::vector<bool> sat(st.commanded.saturated.begin(), st.commanded.saturated.end());
  j["joints_cmd_deg"] = cmd;
  j["joints_actual_deg"] = actual;
  j["joint_saturated"] = sat;
  nlohmann::json flags = {{"buckled", st.any_buckled()}, {"stale", false}, {"tilt_saturated", false},
                          {"ik_saturated", st.commanded.any_saturated()}};
  if (loop_) {
    const BallState& b = loop_->ball();
    nlohmann::json ball = {{"x", b.position.x()},
                           {"y", b.position.y()},
                           {"vx", b.velocity.x()},
                           {"vy", b.velocity.y()},
                           {"at_fence", b.at_fence},
                           {"measured", nullptr}};
    if (const auto& s = loop_->latest_sample())
      ball["measured"] = {{"x", s->measured.x()}, {"y", s->measured.y()}, {"t", s->timestamp}};
    j["ball"] = ball;
    const CascadeState& c = loop_->controller();
    flags["stale"] = c.stale;
    flags["tilt_saturated"] = c.tilt_saturated;
    flags["ik_saturated"] = c.ik_saturated;
  } else {
    j["ball"] = nullptr;
  }
  if (mode_ == ServiceMode::Trace) {
    const double dwell = cfg_.puck_cascade.waypoint_dwell;
    const std::size_t k = waypoint_index(path_.size(), std::max(0.0, time_ - trace_start_), dwell);
    j["waypoint"] = {{"x", path_[k].x()},
                     {"y", path_[k].y()},
                     {"index", k},
                     {"count", path_.size()},
                     {"letter", std::string(1, letters_[letter_index_])}};
  } else {
    j["waypoint"] = nullptr;
  }
  j["flags"] = flags;
  j["commander_present"] = commander_.has_value();
  j["commands"] = {{"applied", applied_}, {"dropped", dropped_}};
  return j;
}

// ---------------------------------------------------------------------------

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

struct WebSocketServer::Impl {
  struct Session : std::enable_shared_from_this<Session> {
    Session(Impl& owner, tcp::socket socket) : owner(owner), ws(std::move(socket)) {}

    void start() {
      ws.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
      ws.async_accept([self = shared_from_this()](beast::error_code ec) {
        if (ec) return self->owner.log(2, "handshake failed: " + ec.message());
        self->id = self->owner.core.connect();
        self->owner.sessions[self->id] = self;
        self->owner.log(1, "client " + std::to_string(self->id) + " connected");
        self->owner.flush();
        self->read();
      });
    }

    void read() {
      ws.async_read(buffer, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) return self->close();
        const std::string text = beast::buffers_to_string(self->buffer.data());
        self->buffer.consume(self->buffer.size());
        self->owner.core.receive(self->id, text);
        self->owner.flush();
        self->read();
      });
    }

    void push(std::string text, bool droppable) {
      if (closed) return;
      if (droppable && queue.size() >= owner.cfg.serve.viewer_queue) {
        ++dropped_telemetry;
        return;
      }
      if (queue.size() > 4 * owner.cfg.serve.viewer_queue + 64) {
        owner.log(2, "client " + std::to_string(id) + " not reading; closing");
        return close();
      }
      queue.push_back(std::move(text));
      if (queue.size() == 1) write();
    }

    void write() {
      ws.text(true);
      ws.async_write(asio::buffer(queue.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) return self->close();
        self->queue.pop_front();
        if (!self->queue.empty()) self->write();
      });
    }

    void close() {
      if (closed) return;
      closed = true;
      if (id) {
        owner.core.disconnect(id);
        owner.sessions.erase(id);
        owner.log(1, "client " + std::to_string(id) + " disconnected");
      }
      beast::error_code ignored;
      beast::get_lowest_layer(ws).socket().close(ignored);
    }

    Impl& owner;
    websocket::stream<beast::tcp_stream> ws;
    beast::flat_buffer buffer;
    std::deque<std::string> queue;
    ClientId id = 0;
    bool closed = false;
    std::uint64_t dropped_telemetry = 0;
  };

  Impl(const ExperimentConfig& c, std::uint64_t seed)
      : cfg(c), core(c, seed), acceptor(ioc), timer(ioc), log_level(level_rank(c.serve.log_level)) {}

  void log(int level, const std::string& msg) {
    if (level < log_level) return;
    static const char* names[] = {"debug", "info", "warn", "error"};
    std::cerr << "[" << utc_timestamp() << "] " << names[level] << ": " << msg << std::endl;
  }

  void flush() {
    for (auto& o : core.drain()) {
      auto it = sessions.find(o.client);
      if (it != sessions.end()) it->second->push(std::move(o.text), o.droppable);
    }
  }

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Session>(*this, std::move(socket))->start();
      accept();
    });
  }

  void tick() {
    const auto now = std::chrono::steady_clock::now();
    // Real-time pacing; a stall is not made up for beyond 50 ms.
    const double behind = std::chrono::duration<double>(now - epoch).count() - core.time();
    const double step = std::clamp(behind, 0.0, 0.05);
    if (step >= cfg.plant.dt()) core.advance(std::floor(step / cfg.plant.dt()) * cfg.plant.dt());
    if (behind > 0.05) epoch += std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                           std::chrono::duration<double>(behind - 0.05));
    flush();
    timer.expires_after(std::chrono::milliseconds(5));
    timer.async_wait([this](beast::error_code ec) {
      if (!ec) tick();
    });
  }

  ExperimentConfig cfg;
  ServiceCore core;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  asio::steady_timer timer;
  int log_level;
  std::map<ClientId, std::shared_ptr<Session>> sessions;
  std::chrono::steady_clock::time_point epoch;
};

WebSocketServer::WebSocketServer(const ExperimentConfig& cfg, std::uint64_t seed)
    : impl_(std::make_unique<Impl>(cfg, seed)) {}

WebSocketServer::~WebSocketServer() = default;

unsigned short WebSocketServer::listen() {
  auto& i = *impl_;
  const tcp::endpoint ep(asio::ip::make_address(i.cfg.serve.bind_address), static_cast<unsigned short>(i.cfg.serve.port));
  i.acceptor.open(ep.protocol());
  i.acceptor.set_option(asio::socket_base::reuse_address(true));
  i.acceptor.bind(ep);
  i.acceptor.listen();
  const unsigned short port = i.acceptor.local_endpoint().port();
  i.log(1, "listening on " + i.cfg.serve.bind_address + ":" + std::to_string(port));
  return port;
}

void WebSocketServer::run() {
  auto& i = *impl_;
  i.epoch = std::chrono::steady_clock::now();
  asio::signal_set signals(i.ioc, SIGINT, SIGTERM);
  signals.async_wait([this](beast::error_code ec, int) {
    if (!ec) stop();
  });
  i.accept();
  i.tick();
  i.ioc.run();
}

void WebSocketServer::stop() {
  auto& i = *impl_;
  asio::post(i.ioc, [&i] {
    beast::error_code ignored;
    i.acceptor.close(ignored);
    i.timer.cancel();
    auto sessions = i.sessions;
    for (auto& [id, s] : sessions) s->close();
    i.log(1, "stopped");
    i.ioc.stop();
  });
}

}  // namespace soft_stewart
