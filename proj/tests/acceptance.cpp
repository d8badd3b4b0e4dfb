// Acceptance run: one PASS/FAIL line per headline criterion, exit code 1 if
// any fails. Full-size experiments; expect several minutes on one core.

#include <chrono>
#include <cstdio>
#include <map>
#include <filesystem>
#include <functional>
#include <random>

#include "oracles.hpp"
#include "soft_stewart/experiments.hpp"
#include "soft_stewart/geometry.hpp"
#include "soft_stewart/learned_ik.hpp"
#include "soft_stewart/sweep.hpp"
#include "soft_stewart/teleop.hpp"

using namespace soft_stewart;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool ok = o.pass && in_time;
  if (!ok) ++failures;
  std::printf("%s  %-26s %s; %.1f s (budget %.0f s)%s\n", ok ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs,
              budget_s, in_time ? "" : " OVER BUDGET");
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

// ---- determinism helpers

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::string body = oracle::slurp(e.path().string());
    if (e.path().filename() == "manifest.json") {
      auto j = nlohmann::json::parse(body);
      j.erase("started");
      j.erase("finished");
      body = j.dump();
    }
    out[fs::relative(e.path(), root).generic_string()] = std::move(body);
  }
  return out;
}

void run_all_small(const fs::path& root) {
  ExperimentConfig c;
  c.sweep_axes = {Axis::Roll};
  c.sweep.n_freqs = 6;
  c.sweep.segment_duration = 3.0;
  c.sweep.gap = 0.5;
  c.trace.letters = "HO";
  c.trace.trials = 1;
  c.ik.n_random = 150;
  c.ik.eval_poses = 10;
  c.ik.train.epochs = 5;
  c.scan.increment_deg = 135.0;
  const std::uint64_t seed = 5;
  auto each = [&](const char* kind, auto fn) {
    RunDirectory d(root, kind, seed, c);
    fn(d);
    d.finish();
  };
  each("scan", [&](RunDirectory& d) { run_scan(c, seed, &d); });
  each("sweep", [&](RunDirectory& d) { run_sweep(c, seed, &d); });
  each("disturb", [&](RunDirectory& d) { run_disturb(c, seed, &d); });
  each("trace", [&](RunDirectory& d) { run_trace(c, seed, &d); });
  each("train-ik", [&](RunDirectory& d) { run_train_ik(c, seed, &d); });
  each("eval-ik", [&](RunDirectory& d) { run_eval_ik(c, seed, std::nullopt, &d); });
}

}  // namespace

int main() {
  const ExperimentConfig cfg;
  const PlatformGeometry& g = cfg.plant.geometry;
  std::printf("acceptance, seed %llu\n", static_cast<unsigned long long>(kSeed));

  criterion("ik-oracle", 1.0, [&] {
    std::mt19937_64 rng(kSeed);
    oracle::Layout lay;
    lay.r_lower = g.lower_radius;
    lay.r_upper = g.upper_radius;
    lay.offset = g.corner_offset;
    lay.staggered = g.upper_layout == UpperAnchorLayout::Staggered;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Pose6 p = oracle::random_pose(rng);
      const StrutLengths a = inverse_kinematics(p, g);
      const auto b = oracle::strut_lengths(p, lay);
      for (std::size_t n = 0; n < 6; ++n) worst = std::max(worst, std::abs(a[n] - b[n]));
    }
    return Outcome{worst < 1e-9, "1000 poses, max |dl| " + fmt("%.2e", worst) + " m"};
  });

  criterion("fk-ik-round-trip", 10.0, [&] {
    std::mt19937_64 rng(kSeed + 1);
    const Pose6 guess = teleop_map({});
    int good = 0;
    for (int i = 0; i < 500; ++i) {
      const Pose6 p = oracle::random_pose(rng);
      const FkResult r = solve_pose_for_lengths(inverse_kinematics(p, g), g, guess);
      bool ok = r.converged;
      for (std::size_t k = 0; k < 6 && ok; ++k) ok = std::abs(r.pose[k] - p[k]) < (k < 3 ? 1e-6 : 1e-5);
      good += ok;
    }
    return Outcome{good >= 495, std::to_string(good) + "/500 recovered"};
  });

  criterion("bode-oracle", 30.0, [&] {
    SweepSpec s;
    s.segment_duration = 6.0;
    s.gap = 0.5;
    s.command_rate = 0.0;
    s.latency_compensation = 0.0;
    const double fn = 16.0, zeta = 0.7;
    SecondOrderTarget target(Axis::Roll, 2 * oracle::pi * fn, zeta);
    const BodeResult r = run_bode(target, s);
    const double ref = oracle::mag_db(oracle::second_order(s.f_min, fn, zeta));
    double dm = 0.0, dp = 0.0;
    for (const auto& p : r.points) {
      const auto h = oracle::second_order(p.frequency, fn, zeta);
      dm = std::max(dm, std::abs(p.magnitude_db - (oracle::mag_db(h) - ref)));
      dp = std::max(dp, std::abs(p.phase_deg - oracle::phase_deg(h)));
    }
    const double bw = oracle::second_order_bandwidth(fn, zeta);
    const double bw_err = r.bandwidth_hz ? std::abs(*r.bandwidth_hz / bw - 1.0) : 1.0;
    const bool ok = r.points.size() == 30 && dm <= 0.5 && dp <= 5.0 && bw_err <= 0.05;
    return Outcome{ok, "max dMag " + fmt("%.3f", dm) + " dB, max dPhase " + fmt("%.2f", dp) + " deg, -3 dB off by " +
                           fmt("%.2f", 100 * bw_err) + "%"};
  });

  criterion("calibrated-roll-bandwidth", 300.0, [&] {
    ExperimentConfig c = cfg;
    c.sweep_axes = {Axis::Roll};
    const SweepReport rep = run_sweep(c, kSeed);
    const BodeResult& r = rep.axes.at(0);
    const double bw = r.bandwidth_hz.value_or(-1), pc = r.phase_crossover_hz.value_or(-1);
    const auto peaks = r.local_maxima();
    // one grid step on the log axis
    const double step = std::pow(c.sweep.f_max / c.sweep.f_min, 1.0 / (c.sweep.n_freqs - 1));
    std::string seen;
    bool all_near = true;
    for (double want : {4.0, 6.0, 9.0, 20.0}) {
      bool near = false;
      for (auto i : peaks) {
        const double f = r.points[i].frequency;
        if (f >= want / step && f <= want * step) near = true;
      }
      all_near = all_near && near;
    }
    for (auto i : peaks) seen += fmt(" %.1f", r.points[i].frequency);
    const bool ok = std::abs(bw - 16.0) <= 2.0 && std::abs(pc - 14.0) <= 2.0 && all_near;
    return Outcome{ok, "-3 dB " + fmt("%.2f", bw) + " Hz, -180 deg " + fmt("%.2f", pc) + " Hz, maxima at" + seen + " Hz"};
  });

  criterion("workspace-scan", 120.0, [&] {
    const ScanReport s = run_scan(cfg, kSeed);
    // hardware totals: x y z in m, roll pitch yaw in deg
    const std::array<double, 6> table{0.120, 0.117, 0.079, 34.1, 34.2, 29.2};
    bool ok = s.samples.size() == 4096;
    std::string d = std::to_string(s.samples.size()) + " samples; total vs hardware:";
    for (std::size_t k = 0; k < 6; ++k) {
      const double tot = k < 3 ? s.extents.axes[k].total() : rad2deg(s.extents.axes[k].total());
      const double rel = tot / table[k] - 1.0;
      ok = ok && std::abs(rel) <= 0.25;
      d += fmt(" %+.0f%%", 100 * rel);
    }
    const double px = s.correlation.r[4][0], ry = s.correlation.r[3][1];
    ok = ok && px > 0.5 && ry < -0.5;
    return Outcome{ok, d + "; corr(pitch,x) " + fmt("%+.2f", px) + ", corr(roll,y) " + fmt("%+.2f", ry)};
  });

  criterion("disturbance-rejection", 30.0, [&] {
    const DisturbReport r = run_disturb(cfg, kSeed);
    bool ok = r.trials.size() == 3;
    std::string d = "rejected";
    for (const auto& t : r.trials) {
      ok = ok && !t.aborted && t.rejection.rejected_fraction >= 0.95;
      d += fmt(" %.1f%%", 100 * t.rejection.rejected_fraction);
    }
    return Outcome{ok, d + " within 20 s"};
  });

  criterion("letter-tracing", 600.0, [&] {
    const TraceReport r = run_trace(cfg, kSeed);
    double worst = 0.0;
    char worst_letter = '?';
    for (const auto& [l, m] : r.letter_mse_cm2)
      if (m > worst) {
        worst = m;
        worst_letter = l;
      }
    const bool ok = r.trials.size() == 50 && r.aborted == 0 && worst <= 0.5;
    return Outcome{ok, std::to_string(r.trials.size()) + " trials, " + std::to_string(r.aborted) + " aborted, overall " +
                           fmt("%.3f", r.overall_mse_cm2) + " cm2, worst " + std::string(1, worst_letter) + " " +
                           fmt("%.3f", worst) + " cm2"};
  });

  criterion("learned-ik", 420.0, [&] {
    // gradient check on the production architecture
    std::mt19937_64 rng(kSeed + 2);
    Mlp net(default_ik_layers(), kSeed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd x(6, 32), y(6, 32);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x.data()[i] = nd(rng);
      y.data()[i] = nd(rng);
    }
    Eigen::VectorXd grad;
    net.loss(x, y, &grad);
    Eigen::VectorXd p = net.parameters();
    std::uniform_int_distribution<Eigen::Index> pick(0, p.size() - 1);
    double worst_rel = 0.0;
    for (int k = 0; k < 10; ++k) {
      const Eigen::Index i = pick(rng);
      Eigen::VectorXd q = p;
      q[i] += 1e-5;
      net.set_parameters(q);
      const double up = net.loss(x, y);
      q[i] = p[i] - 1e-5;
      net.set_parameters(q);
      const double fd = (up - net.loss(x, y)) / 2e-5;
      worst_rel = std::max(worst_rel, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-7}));
    }

    const auto t0 = std::chrono::steady_clock::now();
    const TrainIkReport tr = run_train_ik(cfg, kSeed);
    const double train_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const EvalIkReport ev = run_eval_ik(cfg, kSeed, tr.training.model);
    const IkErrorReport& e = ev.report;
    const double tr_ratio = e.learned.translation / e.rigid.translation;
    const double rot_ratio = e.learned.rotation / e.rigid.rotation;
    const auto& loss = tr.training.train_loss;
    const double drop50 = loss.size() >= 50 ? loss.front() / loss[49] : 0.0;
    const bool ok = tr.dataset.pairs.size() + tr.dataset.excluded_buckled == 10000 && ev.targets.size() == 100 &&
                    tr_ratio <= 0.60 && rot_ratio <= 0.70 && worst_rel < 1e-4 && train_s < 180.0 && drop50 >= 10.0;
    return Outcome{ok, "translation " + fmt("%.2f", 1e3 * e.learned.translation) + " vs " +
                           fmt("%.2f", 1e3 * e.rigid.translation) + " mm (" + fmt("%.0f", 100 * tr_ratio) +
                           "%), rotation " + fmt("%.2f", e.learned.rotation) + " vs " + fmt("%.2f", e.rigid.rotation) +
                           " deg (" + fmt("%.0f", 100 * rot_ratio) + "%), grad rel err " + fmt("%.1e", worst_rel) +
                           ", loss /" + fmt("%.0f", drop50) + " by epoch 50, pipeline " + fmt("%.0f", train_s) + " s"};
  });

  criterion("determinism", 300.0, [&] {
    const fs::path base = fs::temp_directory_path() / ("ss_accept_" + std::to_string(::getpid()));
    fs::remove_all(base);
    run_all_small(base / "a");
    run_all_small(base / "b");
    const auto a = read_tree(base / "a"), b = read_tree(base / "b");
    std::size_t differing = 0;
    for (const auto& [k, v] : a)
      if (!b.count(k) || b.at(k) != v) ++differing;
    const bool ok = !a.empty() && a.size() == b.size() && differing == 0;
    fs::remove_all(base);
    return Outcome{ok, std::to_string(a.size()) + " files over 6 experiment kinds, " + std::to_string(differing) +
                           " differ"};
  });

  std::printf("%s: %d failing\n", failures ? "FAILED" : "ALL PASS", failures);
  return failures ? 1 : 0;
}
