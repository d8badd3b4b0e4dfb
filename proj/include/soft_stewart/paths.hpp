#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace soft_stewart {

using Waypoint = Eigen::Vector2d;
using Path = std::vector<Waypoint>;

inline constexpr double kLetterHeight = 0.22;
inline constexpr double kWaypointSpacing = 0.018;
inline constexpr std::size_t kMinWaypoints = 24;
inline constexpr std::size_t kMaxWaypoints = 44;

/// Letters with a stroke definition.
bool letter_supported(char c);

/// Unit-height stroke polyline of a letter, centered on the origin.
Path letter_outline(char c);

/// Waypoints for one letter: the outline scaled to kLetterHeight and
/// resampled at equal arc length. Throws std::invalid_argument for letters
/// without a stroke definition.
Path letter_path(char c);

/// `count` points at equal arc-length spacing along a polyline, ends included.
Path resample_polyline(const Path& polyline, std::size_t count);
double polyline_length(const Path& polyline);

/// path[floor(t / dwell)], held at the last waypoint. Throws on an empty path.
const Waypoint& waypoint_sequencer(const Path& path, double t, double dwell = 8.0);
std::size_t waypoint_index(std::size_t path_size, double t, double dwell = 8.0);

/// `text` upper-cased with whitespace removed.
std::string traceable_letters(const std::string& text);

}  // namespace soft_stewart
