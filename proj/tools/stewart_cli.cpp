// soft-stewart: experiment runner and live service.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "soft_stewart/experiments.hpp"
#include "soft_stewart/service.hpp"

using namespace soft_stewart;

namespace {

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out = "runs";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "INI file layered over the defaults")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "master seed")->capture_default_str();
  cmd->add_option("--out", c.out, "root directory for run outputs")->capture_default_str();
}

ExperimentConfig load(const Common& c) {
  return c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft Stewart platform simulator"};
  app.require_subcommand(1);

  Common trace_o, disturb_o, sweep_o, scan_o, train_o, eval_o, serve_o;
  std::string letters;
  int trials = 0;
  std::string model_path;
  std::string bind;
  int port = -1;

  auto* trace = app.add_subcommand("trace", "letter tracing with the puck");
  add_common(trace, trace_o);
  trace->add_option("--letters", letters, "letters to trace (default from config)");
  trace->add_option("--trials", trials, "trials per letter (default from config)");

  auto* disturb = app.add_subcommand("disturb", "impulse rejection with the rolling ball");
  add_common(disturb, disturb_o);

  auto* sweep = app.add_subcommand("sweep", "frequency response of the platform");
  add_common(sweep, sweep_o);

  auto* scan = app.add_subcommand("scan", "joint-space raster of the workspace");
  add_common(scan, scan_o);

  auto* train = app.add_subcommand("train-ik", "build the dataset and train the learned IK");
  add_common(train, train_o);

  auto* eval = app.add_subcommand("eval-ik", "learned vs rigid IK on fresh poses");
  add_common(eval, eval_o);
  eval->add_option("--model", model_path, "model.json from train-ik (trains one when omitted)")
      ->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "live simulation over WebSocket");
  add_common(serve, serve_o);
  serve->add_option("--bind", bind, "bind address (overrides env and config)");
  serve->add_option("--port", port, "port, 0 picks a free one");

  CLI11_PARSE(app, argc, argv);

  try {
    if (trace->parsed()) {
      auto cfg = load(trace_o);
      if (!letters.empty()) cfg.trace.letters = traceable_letters(letters);
      if (trials > 0) cfg.trace.trials = trials;
      cfg.validate();
      RunDirectory run(trace_o.out, "trace", trace_o.seed, cfg);
      const auto r = run_trace(cfg, trace_o.seed, &run);
      run.finish();
      for (const auto& [c, mse] : r.letter_mse_cm2) std::cout << c << "  " << fmt("%.4f", mse) << " cm^2\n";
      std::cout << "overall " << fmt("%.4f", r.overall_mse_cm2) << " cm^2, aborted " << r.aborted << "\n"
                << run.path().string() << "\n";
      return r.aborted ? 2 : 0;
    }
    if (disturb->parsed()) {
      const auto cfg = load(disturb_o);
      RunDirectory run(disturb_o.out, "disturb", disturb_o.seed, cfg);
      const auto r = run_disturb(cfg, disturb_o.seed, &run);
      run.finish();
      for (const auto& t : r.trials)
        std::cout << fmt("%6.1f deg", t.direction_deg) << "  peak " << fmt("%.4f m", t.rejection.peak_displacement)
                  << "  rejected " << fmt("%.1f%%", 100.0 * t.rejection.rejected_fraction)
                  << (t.aborted ? "  ABORTED " + t.diagnostic : "") << "\n";
      std::cout << run.path().string() << "\n";
      return 0;
    }
    if (sweep->parsed()) {
      const auto cfg = load(sweep_o);
      RunDirectory run(sweep_o.out, "sweep", sweep_o.seed, cfg);
      const auto r = run_sweep(cfg, sweep_o.seed, &run);
      run.finish();
      for (const auto& b : r.axes) {
        std::cout << kAxisNames[static_cast<std::size_t>(b.axis)] << ": -3 dB "
                  << (b.bandwidth_hz ? fmt("%.2f Hz", *b.bandwidth_hz) : "none") << ", -180 deg "
                  << (b.phase_crossover_hz ? fmt("%.2f Hz", *b.phase_crossover_hz) : "none") << "\n";
        for (const auto& f : b.failures) std::cout << "  warning: " << f << "\n";
      }
      std::cout << run.path().string() << "\n";
      return 0;
    }
    if (scan->parsed()) {
      const auto cfg = load(scan_o);
      RunDirectory run(scan_o.out, "scan", scan_o.seed, cfg);
      const auto r = run_scan(cfg, scan_o.seed, &run);
      run.finish();
      for (std::size_t a = 0; a < 6; ++a) {
        const double t = r.extents.axes[a].total();
        std::cout << kAxisNames[a] << " total " << (a < 3 ? fmt("%.4f m", t) : fmt("%.2f deg", rad2deg(t))) << "\n";
      }
      std::cout << "samples " << r.samples.size() << ", excluded " << r.extents.excluded << "\n"
                << run.path().string() << "\n";
      return 0;
    }
    if (train->parsed()) {
      const auto cfg = load(train_o);
      RunDirectory run(train_o.out, "train-ik", train_o.seed, cfg);
      const auto r = run_train_ik(cfg, train_o.seed, &run);
      run.finish();
      std::cout << "pairs " << r.dataset.pairs.size() << ", best epoch " << r.training.best_epoch
                << ", validation loss " << fmt("%.3g", r.training.validation_loss.at(r.training.best_epoch - 1))
                << "\n"
                << run.path().string() << "\n";
      return 0;
    }
    if (eval->parsed()) {
      const auto cfg = load(eval_o);
      std::optional<Mlp> model;
      if (!model_path.empty()) model = Mlp::from_json(read_file(model_path));
      RunDirectory run(eval_o.out, "eval-ik", eval_o.seed, cfg);
      const auto r = run_eval_ik(cfg, eval_o.seed, model, &run);
      run.finish();
      const auto& e = r.report;
      std::cout << "evaluated " << e.evaluated << " (excluded " << e.excluded << ")\n"
                << "translation rigid " << fmt("%.2f mm", 1e3 * e.rigid.translation) << ", learned "
                << fmt("%.2f mm", 1e3 * e.learned.translation) << "\n"
                << "rotation    rigid " << fmt("%.3f deg", e.rigid.rotation) << ", learned "
                << fmt("%.3f deg", e.learned.rotation) << "\n"
                << run.path().string() << "\n";
      return 0;
    }
    if (serve->parsed()) {
      auto cfg = load(serve_o);
      apply_environment(cfg.serve);
      if (!bind.empty()) cfg.serve.bind_address = bind;
      if (port >= 0) cfg.serve.port = port;
      cfg.validate();
      // The live session still gets a manifest, written up front.
      RunDirectory run(serve_o.out, "serve", serve_o.seed, cfg);
      run.finish();
      WebSocketServer server(cfg, serve_o.seed);
      const unsigned short bound = server.listen();
      std::cout << "ws://" << cfg.serve.bind_address << ":" << bound << std::endl;
      server.run();  // until SIGINT or SIGTERM
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
