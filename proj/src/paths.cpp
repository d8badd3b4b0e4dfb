#include "soft_stewart/paths.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace soft_stewart {

namespace {

constexpr double w = 0.3;  // half width of a unit-height glyph

Path outline_for(char c) {
  switch (c) {
    case 'H': return {{-w, 0.5}, {-w, -0.5}, {-w, 0.0}, {w, 0.0}, {w, 0.5}, {w, -0.5}};
    case 'E': return {{w, 0.5}, {-w, 0.5}, {-w, 0.0}, {0.7 * w, 0.0}, {-w, 0.0}, {-w, -0.5}, {w, -0.5}};
    case 'L': return {{-w, 0.5}, {-w, -0.5}, {w, -0.5}};
    case 'W': return {{-w, 0.5}, {-0.5 * w, -0.5}, {0.0, 0.1}, {0.5 * w, -0.5}, {w, 0.5}};
    case 'R':
      return {{-w, -0.5}, {-w, 0.5}, {0.5 * w, 0.5}, {w, 0.35}, {w, 0.15}, {0.5 * w, 0.0}, {-w, 0.0}, {w, -0.5}};
    case 'D':
      return {{-w, -0.5}, {-w, 0.5}, {0.3 * w, 0.5}, {w, 0.25}, {w, -0.25}, {0.3 * w, -0.5}, {-w, -0.5}};
    case 'O': {
      Path p;
      for (int k = 0; k <= 12; ++k) {
        const double a = 0.5 * std::numbers::pi + 2.0 * std::numbers::pi * k / 12.0;
        p.emplace_back(w * std::cos(a), 0.5 * std::sin(a));
      }
      return p;
    }
    default: return {};
  }
}

}  // namespace

bool letter_supported(char c) { return !outline_for(static_cast<char>(std::toupper(static_cast<unsigned char>(c)))).empty(); }

Path letter_outline(char c) {
  Path p = outline_for(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (p.empty()) throw std::invalid_argument(std::string("no strokes defined for letter '") + c + "'");
  return p;
}

double polyline_length(const Path& polyline) {
  double len = 0.0;
  for (std::size_t i = 1; i < polyline.size(); ++i) len += (polyline[i] - polyline[i - 1]).norm();
  return len;
}

Path resample_polyline(const Path& polyline, std::size_t count) {
  if (polyline.size() < 2 || count < 2) throw std::invalid_argument("resample: need two points in and out");
  const double total = polyline_length(polyline);
  Path out;
  out.reserve(count);
  std::size_t seg = 1;
  double seg_start = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(count - 1);
    double seg_len = (polyline[seg] - polyline[seg - 1]).norm();
    while (seg + 1 < polyline.size() && seg_start + seg_len < s) {
      seg_start += seg_len;
      ++seg;
      seg_len = (polyline[seg] - polyline[seg - 1]).norm();
    }
    const double a = seg_len > 0.0 ? std::clamp((s - seg_start) / seg_len, 0.0, 1.0) : 0.0;
    out.push_back(polyline[seg - 1] + a * (polyline[seg] - polyline[seg - 1]));
  }
  out.back() = polyline.back();
  return out;
}

Path letter_path(char c) {
  Path outline = letter_outline(c);
  for (auto& p : outline) p *= kLetterHeight;
  const double len = polyline_length(outline);
  const auto n = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(len / kWaypointSpacing)) + 1,
                                         kMinWaypoints, kMaxWaypoints);
  return resample_polyline(outline, n);
}

std::size_t waypoint_index(std::size_t path_size, double t, double dwell) {
  if (path_size == 0) throw std::invalid_argument("waypoint_sequencer: empty path");
  if (!(dwell > 0.0)) throw std::invalid_argument("waypoint_sequencer: dwell must be positive");
  if (!(t > 0.0)) return 0;
  const double k = std::floor(t / dwell);
  return k >= static_cast<double>(path_size - 1) ? path_size - 1 : static_cast<std::size_t>(k);
}

const Waypoint& waypoint_sequencer(const Path& path, double t, double dwell) {
  return path[waypoint_index(path.size(), t, dwell)];
}

std::string traceable_letters(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace soft_stewart
