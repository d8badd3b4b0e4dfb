#include "soft_stewart/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace soft_stewart {

void SweepSpec::validate() const {
  if (axis != Axis::Roll && axis != Axis::Pitch && axis != Axis::Yaw)
    throw std::invalid_argument("sweep: axis must be roll, pitch or yaw");
  if (n_freqs < 2 || !(f_min > 0.0) || !(f_max > f_min))
    throw std::invalid_argument("sweep: need at least two increasing frequencies");
  if (!(segment_duration > 0.0) || gap < 0.0 || !(sample_rate > 0.0) || command_rate < 0.0)
    throw std::invalid_argument("sweep: invalid timing");
  if (!(amplitude_fraction > 0.0)) throw std::invalid_argument("sweep: amplitude must be positive");
  if (f_max > 0.5 * sample_rate) throw std::invalid_argument("sweep: f_max above Nyquist");
}

std::vector<double> SweepSpec::frequencies() const {
  std::vector<double> f(static_cast<std::size_t>(n_freqs));
  const double ratio = std::log(f_max / f_min) / static_cast<double>(n_freqs - 1);
  for (int k = 0; k < n_freqs; ++k) f[static_cast<std::size_t>(k)] = f_min * std::exp(ratio * k);
  f.back() = f_max;
  return f;
}

double SweepSpec::segment_length(double f) const { return std::max(segment_duration, min_cycles / f); }

SweepSchedule generate_sweep(const SweepSpec& spec, const PoseBounds& bounds) {
  spec.validate();
  SweepSchedule s;
  s.axis = spec.axis;
  s.center = bounds.center();
  s.center.z += spec.z_offset_fraction * (bounds.max.z - bounds.min.z);
  s.amplitude = spec.amplitude_fraction * bounds.half_range(static_cast<std::size_t>(spec.axis));
  double t = 0.0;
  for (double f : spec.frequencies()) {
    if (!s.segments.empty()) t += spec.gap;
    SweepSegment seg{f, t, spec.segment_length(f)};
    s.segments.push_back(seg);
    t += seg.duration;
  }
  s.total_duration = t;
  return s;
}

Pose6 SweepSchedule::command_at(double t) const {
  Pose6 p = center;
  for (const auto& seg : segments) {
    if (t >= seg.start && t < seg.start + seg.duration) {
      p[axis] += amplitude * std::sin(2.0 * kPi * seg.frequency * (t - seg.start));
      break;
    }
  }
  return p;
}

double amplitude_envelope(const std::vector<double>& signal, double sample_rate, double f) {
  if (!(f > 0.0) || !(sample_rate > 0.0)) throw std::invalid_argument("envelope: bad rate");
  const auto window = static_cast<std::size_t>(std::lround(sample_rate / f));
  if (window < 2 || signal.size() < 3 * window)
    throw std::invalid_argument("envelope: need at least three wavelengths of data");

  std::deque<std::size_t> hi, lo;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < signal.size(); ++i) {
    while (!hi.empty() && signal[hi.back()] <= signal[i]) hi.pop_back();
    while (!lo.empty() && signal[lo.back()] >= signal[i]) lo.pop_back();
    hi.push_back(i);
    lo.push_back(i);
    if (i + 1 < window) continue;
    const std::size_t first = i + 1 - window;
    while (hi.front() < first) hi.pop_front();
    while (lo.front() < first) lo.pop_front();
    sum += 0.5 * (signal[hi.front()] - signal[lo.front()]);
    ++count;
  }
  return sum / static_cast<double>(count);
}

std::vector<double> bode_magnitude(const std::vector<double>& amplitudes) {
  if (amplitudes.empty() || !(amplitudes.front() > 0.0))
    throw std::invalid_argument("bode: reference amplitude must be positive");
  std::vector<double> db;
  db.reserve(amplitudes.size());
  for (double a : amplitudes) db.push_back(20.0 * std::log10(a / amplitudes.front()));
  return db;
}

namespace {

std::vector<double> centered(const double* begin, std::size_t n) {
  const double mean = std::accumulate(begin, begin + n, 0.0) / static_cast<double>(n);
  std::vector<double> out(begin, begin + n);
  for (double& v : out) v -= mean;
  return out;
}

}  // namespace

std::optional<double> phase_delay(const std::vector<double>& input, const std::vector<double>& output,
                                  double sample_rate, double f, double latency) {
  if (input.size() != output.size()) throw std::invalid_argument("phase: series lengths differ");
  const auto shift = static_cast<std::size_t>(std::max(0L, std::lround(latency * sample_rate)));
  const double period = sample_rate / f;
  const auto lags = static_cast<std::ptrdiff_t>(std::ceil(period));
  if (input.size() < shift + static_cast<std::size_t>(2 * lags + 4))
    throw std::invalid_argument("phase: series too short for the requested frequency");

  const std::size_t n = input.size() - shift;
  const std::vector<double> x = centered(input.data(), n);
  const std::vector<double> y = centered(output.data() + shift, n);
  auto energy = [](const std::vector<double>& v) { return std::inner_product(v.begin(), v.end(), v.begin(), 0.0); };
  const double ex = energy(x), ey = energy(y);
  if (!(ex > 1e-300) || !(ey > 1e-24 * ex)) return std::nullopt;

  // R(k) = sum_i x[i] y[i + k] over a fixed range of i so every lag sees the same samples.
  // Whole periods only, so partial cycles do not skew the peak.
  const std::size_t first = 1;
  const double room = static_cast<double>(n - static_cast<std::size_t>(lags) - 2);
  const auto count = static_cast<std::size_t>(std::lround(std::floor(room / period) * period));
  auto corr = [&](std::ptrdiff_t k) {
    const double* yk = y.data() + static_cast<std::ptrdiff_t>(first) + k;
    return std::inner_product(x.begin() + static_cast<std::ptrdiff_t>(first),
                              x.begin() + static_cast<std::ptrdiff_t>(first + count), yk, 0.0);
  };

  const std::ptrdiff_t stride = std::max<std::ptrdiff_t>(1, lags / 64);
  std::ptrdiff_t best = 0;
  double best_r = corr(0);
  for (std::ptrdiff_t k = stride; k < lags; k += stride) {
    const double r = corr(k);
    if (r > best_r) best_r = r, best = k;
  }
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, best - stride), hi = std::min(lags - 1, best + stride);
  for (std::ptrdiff_t k = lo; k <= hi; ++k) {
    const double r = corr(k);
    if (r > best_r) best_r = r, best = k;
  }

  const double w = 2.0 * kPi * f / sample_rate;  // rad per sample
  const double rm = corr(best - 1), rp = corr(best + 1);
  const double theta = std::atan2((rp - rm) / (2.0 * std::sin(w)), best_r);
  double tau = (static_cast<double>(best) + theta / w) / sample_rate;
  if (tau >= 1.0 / f) tau -= 1.0 / f;
  return -360.0 * f * tau;
}

std::vector<double> unwrap_phase(const std::vector<double>& phase_deg) {
  std::vector<double> out = phase_deg;
  for (std::size_t i = 1; i < out.size(); ++i) {
    while (out[i] - out[i - 1] > 180.0) out[i] -= 360.0;
    while (out[i] - out[i - 1] < -180.0) out[i] += 360.0;
  }
  return out;
}

std::optional<double> crossover_frequency(const std::vector<double>& freqs, const std::vector<double>& values,
                                          double level) {
  for (std::size_t i = 1; i < freqs.size() && i < values.size(); ++i) {
    if (values[i - 1] >= level && values[i] < level) {
      const double a = (values[i - 1] - level) / (values[i - 1] - values[i]);
      return std::exp(std::log(freqs[i - 1]) + a * (std::log(freqs[i]) - std::log(freqs[i - 1])));
    }
  }
  return std::nullopt;
}

std::vector<std::size_t> BodeResult::local_maxima() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < points.size(); ++i)
    if (points[i].magnitude_db > points[i - 1].magnitude_db && points[i].magnitude_db > points[i + 1].magnitude_db)
      out.push_back(i);
  return out;
}

void SecondOrderTarget::reset(const Pose6& hold) {
  x_ = hold[axis_];
  v_ = 0.0;
  u_ = hold[axis_];
}

double SecondOrderTarget::advance(const Pose6& command, double dt) {
  if (dt != dt_) {
    dt_ = dt;
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    m(0, 1) = 1.0;
    m(1, 0) = -omega_ * omega_;
    m(1, 1) = -2.0 * zeta_ * omega_;
    m(1, 2) = omega_ * omega_;
    m(2, 3) = 1.0;
    const Eigen::Matrix4d e = (m * dt).exp();
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 4; ++c) foh_[4 * r + c] = e(r, c);
  }
  const double u = command[axis_], slope = (u - u_) / dt;
  const double x = foh_[0] * x_ + foh_[1] * v_ + foh_[2] * u_ + foh_[3] * slope;
  v_ = foh_[4] * x_ + foh_[5] * v_ + foh_[6] * u_ + foh_[7] * slope;
  x_ = x;
  u_ = u;
  return x_;
}

PlantTarget::PlantTarget(PlantConfig cfg, Axis axis, double payload) : plant_(std::move(cfg), payload), axis_(axis) {}

void PlantTarget::reset(const Pose6& hold) {
  const PlatformGeometry& g = plant_.config().geometry;
  const JointVector joints = lengths_to_joints(inverse_kinematics(hold, g), g);
  plant_.reset(joints);
  plant_.settle(joints, 3.0);
  delay_.assign(static_cast<std::size_t>(std::lround(plant_.config().imu.latency * plant_.config().sim_rate)),
                plant_.state().pose[axis_]);
}

double PlantTarget::advance(const Pose6& command, double dt) {
  const PlatformGeometry& g = plant_.config().geometry;
  plant_.step(lengths_to_joints(inverse_kinematics(command, g), g), dt);
  delay_.push_back(plant_.state().pose[axis_]);
  const double out = delay_.front();
  delay_.pop_front();
  return out;
}

BodeResult run_bode(FrequencyResponseTarget& target, const SweepSpec& spec, const PoseBounds& bounds) {
  const SweepSchedule sched = generate_sweep(spec, bounds);
  const double dt = 1.0 / spec.sample_rate;
  target.reset(sched.center);

  BodeResult result;
  result.axis = spec.axis;
  std::vector<double> amps;
  std::vector<double> phases;
  double prev_end = 0.0;
  for (const auto& seg : sched.segments) {
    // Hold the center through the gap before each segment.
    const auto gap_steps = static_cast<long>(std::lround((seg.start - prev_end) / dt));
    for (long i = 0; i < gap_steps; ++i) target.advance(sched.center, dt);
    prev_end = seg.start + seg.duration;

    const auto steps = static_cast<std::size_t>(std::lround(seg.duration / dt));
    std::vector<double> in(steps), out(steps);
    const double w = 2.0 * kPi * seg.frequency;
    for (std::size_t i = 0; i < steps; ++i) {
      const double t0 = static_cast<double>(i) * dt;
      const double hold_t = spec.command_rate > 0.0
                                ? std::floor(t0 * spec.command_rate + 1e-9) / spec.command_rate
                                : t0 + dt;
      Pose6 cmd = sched.center;
      cmd[spec.axis] += sched.amplitude * std::sin(w * hold_t);
      out[i] = target.advance(cmd, dt);
      in[i] = sched.center[spec.axis] + sched.amplitude * std::sin(w * (t0 + dt));
    }

    // Drop the first period as start-up transient when there is room for it.
    const double lead_time = std::clamp(seg.duration - 4.0 / seg.frequency, 0.0, 1.0 / seg.frequency);
    const auto lead = static_cast<std::ptrdiff_t>(std::lround(lead_time / dt));
    const std::vector<double> in_w(in.begin() + lead, in.end()), out_w(out.begin() + lead, out.end());

    BodePoint p;
    p.frequency = seg.frequency;
    try {
      p.amplitude = amplitude_envelope(out_w, spec.sample_rate, seg.frequency);
      const auto ph = phase_delay(in_w, out_w, spec.sample_rate, seg.frequency, spec.latency_compensation);
      if (ph) {
        p.phase_deg = *ph;
        p.valid = true;
      } else {
        result.failures.push_back("flat output at " + std::to_string(seg.frequency) + " Hz");
      }
    } catch (const std::exception& e) {
      result.failures.push_back(std::to_string(seg.frequency) + " Hz: " + e.what());
    }
    result.points.push_back(p);
  }

  std::vector<double> freqs, valid_amps, valid_phase;
  for (const auto& p : result.points)
    if (p.valid) freqs.push_back(p.frequency), valid_amps.push_back(p.amplitude), valid_phase.push_back(p.phase_deg);
  if (valid_amps.empty() || !(valid_amps.front() > 0.0)) {
    result.failures.push_back("no usable reference amplitude");
    return result;
  }
  const std::vector<double> db = bode_magnitude(valid_amps);
  const std::vector<double> ph = unwrap_phase(valid_phase);
  std::size_t j = 0;
  for (auto& p : result.points) {
    if (!p.valid) continue;
    p.magnitude_db = db[j];
    p.phase_deg = ph[j];
    ++j;
  }
  result.bandwidth_hz = crossover_frequency(freqs, db, -3.0);
  result.phase_crossover_hz = crossover_frequency(freqs, ph, -180.0);
  return result;
}

}  // namespace soft_stewart
