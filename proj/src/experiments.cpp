#include "soft_stewart/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "soft_stewart/cascade.hpp"
#include "soft_stewart/paths.hpp"

namespace soft_stewart {

namespace {

// Seed streams.
constexpr std::uint64_t kScanStream = 1;
constexpr std::uint64_t kDatasetStream = 2;
constexpr std::uint64_t kTrainStream = 3;
constexpr std::uint64_t kTestPoseStream = 4;
constexpr std::uint64_t kDisturbStream = 2000;
constexpr std::uint64_t kTraceStream = 100000;

// MSE and rejection read the trajectory at this many plant steps.
constexpr int kMetricEvery = 10;

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::vector<std::string> loop_header() {
  return {"t",           "x",          "y",         "target_x",       "target_y",       "measured_x",
          "measured_y",  "roll_cmd_deg", "pitch_cmd_deg", "plate_roll_deg", "plate_pitch_deg", "at_fence",
          "stale"};
}

void loop_row(CsvTable& table, const BalanceLoop& loop, const Waypoint& target, double t) {
  const auto& sample = loop.latest_sample();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Pose6& pose = loop.plant().state().pose;
  table.row(std::vector<double>{t, loop.ball().position.x(), loop.ball().position.y(), target.x(), target.y(),
                                sample ? sample->measured.x() : nan, sample ? sample->measured.y() : nan,
                                rad2deg(loop.controller().roll), rad2deg(loop.controller().pitch), rad2deg(pose.roll),
                                rad2deg(pose.pitch), loop.ball().at_fence ? 1.0 : 0.0,
                                loop.controller().stale ? 1.0 : 0.0});
}

}  // namespace

TraceTrial run_trace_trial(const ExperimentConfig& cfg, char letter, std::uint64_t seed, CsvTable* table) {
  TraceTrial out;
  out.letter = letter;
  out.seed = seed;
  const Path path = letter_path(letter);
  out.waypoints = path.size();
  const BalanceConfig bc = cfg.balance(BallMode::FrictionPuck);
  const double dwell = bc.cascade.waypoint_dwell;

  BalanceLoop loop(bc, seed);
  loop.reset(path.front());
  const double start = loop.time();
  const double end = static_cast<double>(path.size()) * dwell;
  const double dt = bc.plant.dt();
  double pinned = 0.0;
  long step = 0;
  while (loop.time() - start < end - 1e-9) {
    const double t = loop.time() - start;
    const Waypoint& target = waypoint_sequencer(path, t, dwell);
    loop.step(target);
    ++step;
    const double now = loop.time() - start;
    pinned = loop.ball().at_fence ? pinned + dt : 0.0;
    if (step % kMetricEvery == 0) out.trajectory.push_back({now, loop.ball().position});
    if (table && step % cfg.trace.record_every == 0) loop_row(*table, loop, target, now);
    if (pinned > cfg.trace.pinned_abort) {
      out.aborted = true;
      char buf[160];
      std::snprintf(buf, sizeof buf, "object pinned to the fence for %.1f s at t = %.2f s near (%.3f, %.3f)", pinned,
                    now, loop.ball().position.x(), loop.ball().position.y());
      out.diagnostic = buf;
      break;
    }
  }
  out.duration = loop.time() - start;
  out.error = trace_mse(out.trajectory, path, dwell, 0.0);
  return out;
}

TraceReport run_trace(const ExperimentConfig& cfg, std::uint64_t seed, RunDirectory* out) {
  cfg.validate();
  const std::string letters = traceable_letters(cfg.trace.letters);
  TraceReport report;
  std::map<char, std::pair<double, int>> sums;
  CsvTable index({"file", "position", "letter", "trial", "seed", "waypoints", "duration", "mse_cm2", "flagged",
                  "aborted"});
  for (std::size_t pos = 0; pos < letters.size(); ++pos) {
    for (int k = 0; k < cfg.trace.trials; ++k) {
      const std::uint64_t s = derive_seed(seed, kTraceStream + 100 * pos + static_cast<std::uint64_t>(k));
      CsvTable table(loop_header());
      TraceTrial trial = run_trace_trial(cfg, letters[pos], s, out ? &table : nullptr);
      trial.position = pos;
      trial.trial = k;
      char name[64];
      std::snprintf(name, sizeof name, "trajectories/trace_%02zu_%c_%d.csv", pos, letters[pos], k);
      if (out) {
        out->write_csv(name, table);
        index.row(std::vector<std::string>{name, std::to_string(pos), std::string(1, letters[pos]), std::to_string(k),
                                           std::to_string(s), std::to_string(trial.waypoints),
                                           format_number(trial.duration), format_number(trial.error.mse_cm2),
                                           trial.error.any_flagged ? "1" : "0", trial.aborted ? "1" : "0"});
      }
      if (trial.aborted) {
        ++report.aborted;
      } else {
        sums[trial.letter].first += trial.error.mse_cm2;
        sums[trial.letter].second += 1;
      }
      trial.trajectory.shrink_to_fit();
      report.trials.push_back(std::move(trial));
    }
  }
  double total = 0.0;
  int count = 0;
  for (const auto& [letter, acc] : sums) {
    report.letter_mse_cm2[letter] = acc.first / acc.second;
    total += acc.first;
    count += acc.second;
  }
  report.overall_mse_cm2 = count > 0 ? total / count : 0.0;

  if (out) {
    out->write_csv("trials.csv", index);
    nlohmann::json j;
    j["letters"] = letters;
    j["trials_per_letter"] = cfg.trace.trials;
    j["trajectories"] = report.trials.size();
    j["aborted"] = report.aborted;
    j["overall_mse_cm2"] = report.overall_mse_cm2;
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [letter, mse] : report.letter_mse_cm2) per[std::string(1, letter)] = mse;
    j["letter_mse_cm2"] = per;
    nlohmann::json diag = nlohmann::json::array();
    for (const auto& t : report.trials)
      if (t.aborted) diag.push_back({{"position", t.position}, {"trial", t.trial}, {"diagnostic", t.diagnostic}});
    j["aborts"] = diag;
    out->write_json("summary.json", j);
  }
  return report;
}

DisturbTrial run_disturb_trial(const ExperimentConfig& cfg, double direction_deg, double magnitude, std::uint64_t seed,
                               CsvTable* table) {
  DisturbTrial out;
  out.direction_deg = direction_deg;
  out.magnitude = magnitude;
  out.seed = seed;
  const BalanceConfig bc = cfg.balance(BallMode::RollingBall);
  const Waypoint setpoint = Waypoint::Zero();
  BalanceLoop loop(bc, seed);
  loop.reset(setpoint);
  const double start = loop.time();
  const double dt = bc.plant.dt();
  const double kick_at = cfg.disturb.stabilize;
  const double end = kick_at + cfg.disturb.horizon;
  bool kicked = false;
  double pinned = 0.0;
  long step = 0;
  while (loop.time() - start < end - 1e-9) {
    if (!kicked && loop.time() - start >= kick_at - 1e-9) {
      const double a = deg2rad(direction_deg);
      loop.apply_impulse(magnitude * Eigen::Vector2d(std::cos(a), std::sin(a)));
      out.impulse_time = loop.time() - start;
      kicked = true;
      out.trajectory.push_back({out.impulse_time, loop.ball().position});
    }
    loop.step(setpoint);
    ++step;
    const double now = loop.time() - start;
    pinned = loop.ball().at_fence ? pinned + dt : 0.0;
    if (step % kMetricEvery == 0) out.trajectory.push_back({now, loop.ball().position});
    if (table && step % cfg.disturb.record_every == 0) loop_row(*table, loop, setpoint, now);
    if (pinned > cfg.disturb.pinned_abort) {
      out.aborted = true;
      out.diagnostic = "object pinned to the fence";
      break;
    }
  }
  if (magnitude == 0.0) {
    out.rejection = RejectionResult{};
  } else {
    out.rejection =
        rejection_fraction(out.trajectory, setpoint, out.impulse_time, cfg.disturb.horizon, cfg.disturb.settle_window);
    if (out.aborted) out.rejection.rejected_fraction = 0.0;
  }
  return out;
}

DisturbReport run_disturb(const ExperimentConfig& cfg, std::uint64_t seed, RunDirectory* out) {
  cfg.validate();
  DisturbReport report;
  CsvTable summary_rows({"trial", "direction_deg", "magnitude", "seed", "peak_displacement", "final_displacement",
                         "rejected_fraction", "aborted"});
  for (std::size_t i = 0; i < cfg.disturb.directions_deg.size(); ++i) {
    const std::uint64_t s = derive_seed(seed, kDisturbStream + i);
    CsvTable table(loop_header());
    DisturbTrial trial =
        run_disturb_trial(cfg, cfg.disturb.directions_deg[i], cfg.disturb.magnitude, s, out ? &table : nullptr);
    report.worst_rejection = std::min(report.worst_rejection, trial.rejection.rejected_fraction);
    if (out) {
      out->write_csv("trajectories/disturb_" + std::to_string(i) + ".csv", table);
      summary_rows.row(std::vector<std::string>{
          std::to_string(i), format_number(trial.direction_deg), format_number(trial.magnitude), std::to_string(s),
          format_number(trial.rejection.peak_displacement), format_number(trial.rejection.final_displacement),
          format_number(trial.rejection.rejected_fraction), trial.aborted ? "1" : "0"});
    }
    report.trials.push_back(std::move(trial));
  }
  if (out) {
    out->write_csv("trials.csv", summary_rows);
    nlohmann::json j;
    j["stabilize_s"] = cfg.disturb.stabilize;
    j["horizon_s"] = cfg.disturb.horizon;
    j["magnitude_m_s"] = cfg.disturb.magnitude;
    j["worst_rejection"] = report.worst_rejection;
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : report.trials)
      trials.push_back({{"direction_deg", t.direction_deg},
                        {"peak_displacement", t.rejection.peak_displacement},
                        {"final_displacement", t.rejection.final_displacement},
                        {"rejected_fraction", t.rejection.rejected_fraction},
                        {"aborted", t.aborted}});
    j["trials"] = trials;
    out->write_json("summary.json", j);
  }
  return report;
}

nlohmann::json to_json(const BodeResult& r) {
  nlohmann::json j;
  j["axis"] = kAxisNames[static_cast<std::size_t>(r.axis)];
  j["bandwidth_hz"] = optional_number(r.bandwidth_hz);
  j["phase_crossover_hz"] = optional_number(r.phase_crossover_hz);
  nlohmann::json maxima = nlohmann::json::array();
  for (std::size_t i : r.local_maxima()) maxima.push_back(r.points[i].frequency);
  j["local_maxima_hz"] = maxima;
  j["failures"] = r.failures;
  return j;
}

SweepReport run_sweep(const ExperimentConfig& cfg, std::uint64_t, RunDirectory* out) {
  cfg.validate();
  SweepReport report;
  nlohmann::json axes = nlohmann::json::array();
  for (Axis axis : cfg.sweep_axes) {
    SweepSpec spec = cfg.sweep;
    spec.axis = axis;
    PlantTarget target(cfg.plant, axis);
    BodeResult r = run_bode(target, spec);
    if (out) {
      CsvTable t({"freq", "mag_db", "phase_deg", "amplitude", "valid"});
      for (const auto& p : r.points)
        t.row(std::vector<double>{p.frequency, p.magnitude_db, p.phase_deg, p.amplitude, p.valid ? 1.0 : 0.0});
      out->write_csv(std::string("bode_") + kAxisNames[static_cast<std::size_t>(axis)] + ".csv", t);
    }
    axes.push_back(to_json(r));
    report.axes.push_back(std::move(r));
  }
  if (out) out->write_json("summary.json", {{"axes", axes}});
  return report;
}

nlohmann::json to_json(const WorkspaceExtents& e) {
  nlohmann::json j;
  nlohmann::json axes = nlohmann::json::object();
  for (std::size_t i = 0; i < 6; ++i) {
    const double k = i < 3 ? 1.0 : rad2deg(1.0);
    axes[kAxisNames[i]] = {{"min", e.axes[i].min * k}, {"max", e.axes[i].max * k}, {"total", e.axes[i].total() * k},
                           {"unit", i < 3 ? "m" : "deg"}};
  }
  j["axes"] = axes;
  j["samples_used"] = e.used;
  j["samples_excluded"] = e.excluded;
  auto hull = [](const ConvexHull3& h) {
    return nlohmann::json{{"degenerate", h.degenerate},
                          {"vertices", h.vertices.size()},
                          {"faces", h.faces.size()},
                          {"volume", h.volume()},
                          {"area", h.area()}};
  };
  j["position_hull"] = hull(e.position_hull);
  j["position_hull"]["unit"] = "m";
  j["orientation_hull"] = hull(e.orientation_hull);
  j["orientation_hull"]["unit"] = "deg";
  j["xy_profile"] = {{"lobe_amplitude", e.xy_profile.amplitude}, {"vertex_deg", e.xy_profile.vertex_deg}};
  return j;
}

nlohmann::json to_json(const CorrelationMatrix& c) {
  nlohmann::json j;
  j["axes"] = kAxisNames;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < 6; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t k = 0; k < 6; ++k) row.push_back(finite_or_null(c.r[i][k]));
    rows.push_back(row);
  }
  j["matrix"] = rows;
  j["defined"] = c.defined;
  return j;
}

ScanReport run_scan(const ExperimentConfig& cfg, std::uint64_t seed, RunDirectory* out) {
  cfg.validate();
  ScanReport report;
  report.shuffle_seed = derive_seed(seed, kScanStream);
  Plant plant(cfg.plant);
  ScanOptions opts;
  opts.increment_deg = cfg.scan.increment_deg;
  opts.shuffle_seed = report.shuffle_seed;
  opts.settle_time = cfg.scan.settle_time;
  opts.short_circuit = cfg.scan.short_circuit;
  report.samples = workspace_scan(plant, opts);
  report.extents = workspace_extents(report.samples);
  report.correlation = correlation_matrix(report.samples);
  if (out) {
    CsvTable t({"order", "j1", "j2", "j3", "j4", "j5", "j6", "x", "y", "z", "roll_deg", "pitch_deg", "yaw_deg",
                "settled", "buckled"});
    for (const auto& s : report.samples) {
      std::vector<double> row{static_cast<double>(s.order)};
      for (double d : s.joints.deg) row.push_back(d);
      for (std::size_t i = 0; i < 6; ++i) row.push_back(i < 3 ? s.pose[i] : rad2deg(s.pose[i]));
      row.push_back(s.settled ? 1.0 : 0.0);
      row.push_back(s.buckled ? 1.0 : 0.0);
      t.row(row);
    }
    out->write_csv("workspace_samples.csv", t);
    out->write_json("summary.json", {{"samples", report.samples.size()},
                                     {"shuffle_seed", report.shuffle_seed},
                                     {"extents", to_json(report.extents)},
                                     {"correlation", to_json(report.correlation)}});
  }
  return report;
}

TrainIkReport run_train_ik(const ExperimentConfig& cfg, std::uint64_t seed, RunDirectory* out) {
  cfg.validate();
  TrainIkReport r;
  r.scan = run_scan(cfg, seed, nullptr);
  Plant plant(cfg.plant);
  DatasetOptions d;
  d.n_random = cfg.ik.n_random;
  d.test_fraction = cfg.ik.test_fraction;
  d.settle_time = cfg.ik.settle_time;
  d.seed = derive_seed(seed, kDatasetStream);
  r.dataset = build_dataset(plant, r.scan.samples, d);
  TrainOptions t = cfg.ik.train;
  t.seed = derive_seed(seed, kTrainStream);
  r.training = train_ik(r.dataset, t);
  if (out) {
    out->write_text("model.json", r.training.model.to_json() + "\n");
    CsvTable loss({"epoch", "train_loss", "validation_loss"});
    for (std::size_t e = 0; e < r.training.train_loss.size(); ++e)
      loss.row(std::vector<double>{static_cast<double>(e + 1), r.training.train_loss[e], r.training.validation_loss[e]});
    out->write_csv("training_loss.csv", loss);
    CsvTable data({"split", "x", "y", "z", "roll_deg", "pitch_deg", "yaw_deg", "j1", "j2", "j3", "j4", "j5", "j6"});
    for (const auto& p : r.dataset.pairs) {
      std::vector<std::string> row{p.split == Split::Train ? "train" : "test"};
      const auto f = pose_features(p.pose);
      for (int i = 0; i < 6; ++i) row.push_back(format_number(f[i]));
      for (double q : p.joints.deg) row.push_back(format_number(q));
      data.row(row);
    }
    out->write_csv("dataset.csv", data);
    out->write_json("summary.json", {{"pairs", r.dataset.pairs.size()},
                                     {"from_scan", r.dataset.from_scan},
                                     {"from_random", r.dataset.from_random},
                                     {"excluded_buckled", r.dataset.excluded_buckled},
                                     {"train", r.dataset.count(Split::Train)},
                                     {"test", r.dataset.count(Split::Test)},
                                     {"layer_sizes", r.training.model.layer_sizes()},
                                     {"parameters", r.training.model.parameter_count()},
                                     {"best_epoch", r.training.best_epoch},
                                     {"final_learning_rate", r.training.final_learning_rate},
                                     {"final_train_loss", r.training.train_loss.back()},
                                     {"best_validation_loss", r.training.validation_loss[static_cast<std::size_t>(
                                                                   r.training.best_epoch - 1)]}});
  }
  return r;
}

nlohmann::json to_json(const IkErrorReport& r) {
  nlohmann::json axes = nlohmann::json::object();
  for (std::size_t i = 0; i < 6; ++i)
    axes[kAxisNames[i]] = {{"rigid", r.rigid.mean_abs[i]},
                           {"learned", r.learned.mean_abs[i]},
                           {"improvement", r.improvement[i]},
                           {"unit", i < 3 ? "m" : "deg"}};
  return {{"axes", axes},
          {"translation", {{"rigid_m", r.rigid.translation}, {"learned_m", r.learned.translation},
                           {"improvement", r.translation_improvement}}},
          {"rotation", {{"rigid_deg", r.rigid.rotation}, {"learned_deg", r.learned.rotation},
                        {"improvement", r.rotation_improvement}}},
          {"evaluated", r.evaluated},
          {"excluded", r.excluded},
          {"out_of_distribution", r.out_of_distribution}};
}

EvalIkReport run_eval_ik(const ExperimentConfig& cfg, std::uint64_t seed, const std::optional<Mlp>& model,
                         RunDirectory* out) {
  cfg.validate();
  Mlp m = model ? *model : run_train_ik(cfg, seed, nullptr).training.model;
  EvalIkReport r;
  Plant plant(cfg.plant);
  r.targets = sample_test_poses(plant, cfg.ik.eval_poses, derive_seed(seed, kTestPoseStream), cfg.ik.settle_time);
  r.report = evaluate_ik(m, plant, r.targets, cfg.ik.settle_time);
  if (out) {
    CsvTable t({"x", "y", "z", "roll_deg", "pitch_deg", "yaw_deg"});
    for (const auto& p : r.targets) {
      const auto f = pose_features(p);
      t.row(std::vector<double>(f.data(), f.data() + 6));
    }
    out->write_csv("test_poses.csv", t);
    if (!model) out->write_text("model.json", m.to_json() + "\n");
    out->write_json("ik_report.json", to_json(r.report));
  }
  return r;
}

}  // namespace soft_stewart
