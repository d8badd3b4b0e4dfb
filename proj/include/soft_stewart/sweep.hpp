#pragma once

#include <optional>
#include <string>
#include <vector>

#include "soft_stewart/plant.hpp"
#include "soft_stewart/pose.hpp"

namespace soft_stewart {

struct SweepSpec {
  Axis axis = Axis::Roll;
  int n_freqs = 30;
  double f_min = 0.1;
  double f_max = 30.0;
  /// Peak amplitude as a fraction of the axis half-range.
  double amplitude_fraction = 0.10;
  /// Extra height as a fraction of the full z range.
  double z_offset_fraction = 0.20;
  double segment_duration = 60.0;
  double gap = 3.0;
  double latency_compensation = 0.008;
  /// Segments are stretched to at least this many periods.
  double min_cycles = 5.0;
  /// Command update rate; 0 means the command is evaluated continuously.
  double command_rate = 100.0;
  double sample_rate = 1000.0;

  void validate() const;
  std::vector<double> frequencies() const;
  double segment_length(double f) const;
};

struct SweepSegment {
  double frequency = 0.0;
  double start = 0.0;  // s from schedule start
  double duration = 0.0;
};

struct SweepSchedule {
  Axis axis = Axis::Roll;
  Pose6 center;
  double amplitude = 0.0;
  std::vector<SweepSegment> segments;
  double total_duration = 0.0;

  /// Commanded pose at schedule time t (center during gaps).
  Pose6 command_at(double t) const;
};

SweepSchedule generate_sweep(const SweepSpec& spec, const PoseBounds& bounds = {});

/// Mean half peak-to-peak over sliding one-period windows. Throws
/// std::invalid_argument for fewer than three periods of data.
double amplitude_envelope(const std::vector<double>& signal, double sample_rate, double f);

/// 20 log10(A / A[0]). Throws when A[0] is not positive.
std::vector<double> bode_magnitude(const std::vector<double>& amplitudes);

/// Phase of output relative to input in degrees, in (-360, 0], from the
/// cross-correlation peak over delays [0, 1/f). The output is advanced by
/// `latency` first. Empty when either series is flat.
std::optional<double> phase_delay(const std::vector<double>& input, const std::vector<double>& output,
                                  double sample_rate, double f, double latency);

/// Shifts each phase by multiples of 360 to stay within 180 of its predecessor.
std::vector<double> unwrap_phase(const std::vector<double>& phase_deg);

/// First downward crossing of `level`, interpolated linearly in log frequency.
std::optional<double> crossover_frequency(const std::vector<double>& freqs, const std::vector<double>& values,
                                          double level);

struct BodePoint {
  double frequency = 0.0;
  double amplitude = 0.0;
  double magnitude_db = 0.0;
  double phase_deg = 0.0;
  bool valid = false;
};

struct BodeResult {
  Axis axis = Axis::Roll;
  std::vector<BodePoint> points;
  std::optional<double> bandwidth_hz;        // -3 dB
  std::optional<double> phase_crossover_hz;  // -180 deg
  std::vector<std::string> failures;

  /// Indices of points whose magnitude exceeds both neighbours.
  std::vector<std::size_t> local_maxima() const;
};

/// Something that can be driven with pose commands and observed on one axis.
class FrequencyResponseTarget {
 public:
  virtual ~FrequencyResponseTarget() = default;
  virtual void reset(const Pose6& hold) = 0;
  /// Applies `command` for dt seconds and returns the observed value.
  virtual double advance(const Pose6& command, double dt) = 0;
};

/// Output equals the commanded axis value.
class PassThroughTarget : public FrequencyResponseTarget {
 public:
  explicit PassThroughTarget(Axis axis) : axis_(axis) {}
  void reset(const Pose6&) override {}
  double advance(const Pose6& command, double) override { return command[axis_]; }

 private:
  Axis axis_;
};

/// x'' + 2 zeta w x' + w^2 x = w^2 u on one axis, integrated exactly.
/// Unit-gain second-order axis. The input ramps linearly between commands.
class SecondOrderTarget : public FrequencyResponseTarget {
 public:
  SecondOrderTarget(Axis axis, double omega, double zeta) : axis_(axis), omega_(omega), zeta_(zeta) {}
  void reset(const Pose6& hold) override;
  double advance(const Pose6& command, double dt) override;

 private:
  Axis axis_;
  double omega_, zeta_;
  double x_ = 0.0, v_ = 0.0, u_ = 0.0, dt_ = -1.0;
  // first-order hold: exact for an input ramping from u_ to the new command
  std::array<double, 8> foh_{};
};

/// Simulated platform commanded through rigid IK and observed through a
/// noiseless IMU delay line.
class PlantTarget : public FrequencyResponseTarget {
 public:
  PlantTarget(PlantConfig cfg, Axis axis, double payload = 0.0);
  void reset(const Pose6& hold) override;
  double advance(const Pose6& command, double dt) override;
  const Plant& plant() const { return plant_; }

 private:
  Plant plant_;
  Axis axis_;
  std::deque<double> delay_;
};

/// Runs the schedule on `target` and reduces every segment to a Bode point.
BodeResult run_bode(FrequencyResponseTarget& target, const SweepSpec& spec, const PoseBounds& bounds = {});

}  // namespace soft_stewart
