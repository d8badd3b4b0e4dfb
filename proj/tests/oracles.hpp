#pragma once
// Reference implementations used only by tests. Written from the defining
// formulas, sharing no code with the library beyond plain data types.

#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "soft_stewart/pose.hpp"

namespace oracle {

constexpr double pi = 3.14159265358979323846;

using M4 = std::array<std::array<double, 4>, 4>;
using V4 = std::array<double, 4>;

inline M4 eye() {
  M4 m{};
  for (int i = 0; i < 4; ++i) m[i][i] = 1.0;
  return m;
}

inline M4 mul(const M4& a, const M4& b) {
  M4 c{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline V4 xform(const M4& a, const V4& v) {
  V4 r{};
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) r[i] += a[i][k] * v[k];
  return r;
}

inline M4 trans(double x, double y, double z) {
  M4 m = eye();
  m[0][3] = x;
  m[1][3] = y;
  m[2][3] = z;
  return m;
}

inline M4 rot_x(double a) {
  M4 m = eye();
  m[1][1] = std::cos(a);
  m[1][2] = -std::sin(a);
  m[2][1] = std::sin(a);
  m[2][2] = std::cos(a);
  return m;
}

inline M4 rot_y(double a) {
  M4 m = eye();
  m[0][0] = std::cos(a);
  m[0][2] = std::sin(a);
  m[2][0] = -std::sin(a);
  m[2][2] = std::cos(a);
  return m;
}

inline M4 rot_z(double a) {
  M4 m = eye();
  m[0][0] = std::cos(a);
  m[0][1] = -std::sin(a);
  m[1][0] = std::sin(a);
  m[1][1] = std::cos(a);
  return m;
}

// Plate pose: translate, then yaw, pitch, roll about fixed axes.
inline M4 plate(double x, double y, double z, double roll, double pitch, double yaw) {
  return mul(trans(x, y, z), mul(rot_z(yaw), mul(rot_y(pitch), rot_x(roll))));
}

struct Layout {
  double r_lower = 0.0875;
  double r_upper = 0.076;
  double offset = 15.5 * pi / 180.0;
  bool staggered = true;
};

// Pair k sits on the base corner at 120k degrees; its lower anchors are
// offset by -/+ theta_o, written out per strut from the hand-evaluated table.
inline std::array<double, 6> lower_angles(const Layout& l) {
  const double o = l.offset;
  return {0.0 - o, 2 * pi / 3 + o, 2 * pi / 3 - o, 4 * pi / 3 + o, 4 * pi / 3 - o, 2 * pi + o};
}

// Upper anchors: either on the same azimuths, or near the corners of the
// plate hexagon turned by 60 degrees (corner at 120k -/+ 60, anchor pulled
// back toward the pair by theta_o).
inline std::array<double, 6> upper_angles(const Layout& l) {
  if (!l.staggered) return lower_angles(l);
  const double o = l.offset;
  const double s = pi / 3;
  return {-s + o, 2 * pi / 3 + s - o, 2 * pi / 3 - s + o, 4 * pi / 3 + s - o, 4 * pi / 3 - s + o, 2 * pi + s - o};
}

// Strut length as the distance between two points each placed by a chain of
// homogeneous transforms: base -> azimuth -> radius for the lower end, and
// base -> plate pose -> azimuth -> radius for the upper end.
inline std::array<double, 6> strut_lengths(const soft_stewart::Pose6& p, const Layout& l) {
  const auto lo = lower_angles(l);
  const auto up = upper_angles(l);
  const M4 t_plate = plate(p.x, p.y, p.z, p.roll, p.pitch, p.yaw);
  const V4 origin{0, 0, 0, 1};
  std::array<double, 6> out{};
  for (int n = 0; n < 6; ++n) {
    const V4 a = xform(mul(rot_z(lo[n]), trans(l.r_lower, 0, 0)), origin);
    const V4 b = xform(mul(t_plate, mul(rot_z(up[n]), trans(l.r_upper, 0, 0))), origin);
    out[n] = std::sqrt((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1]) + (b[2] - a[2]) * (b[2] - a[2]));
  }
  return out;
}

// x'' + 2 zeta w x' + w^2 x = w^2 u
inline std::complex<double> second_order(double f_hz, double fn_hz, double zeta) {
  const double w = 2 * pi * f_hz, wn = 2 * pi * fn_hz;
  return wn * wn / std::complex<double>(wn * wn - w * w, 2 * zeta * wn * w);
}
inline double mag_db(std::complex<double> h) { return 20.0 * std::log10(std::abs(h)); }
inline double phase_deg(std::complex<double> h) { return std::arg(h) * 180.0 / pi; }

// -3 dB point of the second-order response, by bisection on |H|.
inline double second_order_bandwidth(double fn_hz, double zeta) {
  double lo = 1e-3, hi = 100 * fn_hz;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::abs(second_order(mid, fn_hz, zeta)) > 1.0 / std::sqrt(2.0) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline soft_stewart::Pose6 random_pose(std::mt19937_64& rng, const soft_stewart::PoseBounds& b = {}) {
  soft_stewart::Pose6 p;
  for (std::size_t i = 0; i < 6; ++i) p[i] = std::uniform_real_distribution<double>(b.min[i], b.max[i])(rng);
  return p;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small JSON-schema checker: type, const, enum, properties, required,
// additionalProperties=false, items, min/maxItems, minimum, maximum,
// min/maxLength, oneOf and local $ref. Returns "" when valid.
class Schema {
 public:
  explicit Schema(nlohmann::json root) : root_(std::move(root)) {}

  std::string validate(const nlohmann::json& v) const { return check(root_, v, "$"); }
  std::string validate(const nlohmann::json& v, const std::string& def) const {
    return check(root_.at("definitions").at(def), v, "$");
  }

 private:
  const nlohmann::json& resolve(const nlohmann::json& s) const {
    if (!s.contains("$ref")) return s;
    const std::string ref = s.at("$ref");
    const std::string prefix = "#/definitions/";
    return resolve(root_.at("definitions").at(ref.substr(prefix.size())));
  }

  static bool type_ok(const std::string& t, const nlohmann::json& v) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "number") return v.is_number();
    if (t == "integer") return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
    return false;
  }

  std::string check(const nlohmann::json& schema, const nlohmann::json& v, const std::string& at) const {
    const nlohmann::json& s = resolve(schema);
    if (s.contains("oneOf")) {
      int matches = 0;
      std::string last;
      for (const auto& alt : s.at("oneOf")) {
        const std::string e = check(alt, v, at);
        if (e.empty())
          ++matches;
        else
          last = e;
      }
      if (matches != 1) return at + ": matches " + std::to_string(matches) + " alternatives (" + last + ")";
    }
    if (s.contains("type") && !type_ok(s.at("type"), v)) return at + ": expected " + s.at("type").get<std::string>();
    if (s.contains("const") && s.at("const") != v) return at + ": expected " + s.at("const").dump();
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s.at("enum")) found = found || e == v;
      if (!found) return at + ": not in enum";
    }
    if (v.is_number()) {
      if (s.contains("minimum") && v.get<double>() < s.at("minimum").get<double>()) return at + ": below minimum";
      if (s.contains("maximum") && v.get<double>() > s.at("maximum").get<double>()) return at + ": above maximum";
    }
    if (v.is_string()) {
      const auto n = v.get<std::string>().size();
      if (s.contains("minLength") && n < s.at("minLength").get<std::size_t>()) return at + ": too short";
      if (s.contains("maxLength") && n > s.at("maxLength").get<std::size_t>()) return at + ": too long";
    }
    if (v.is_array()) {
      if (s.contains("minItems") && v.size() < s.at("minItems").get<std::size_t>()) return at + ": too few items";
      if (s.contains("maxItems") && v.size() > s.at("maxItems").get<std::size_t>()) return at + ": too many items";
      if (s.contains("items"))
        for (std::size_t i = 0; i < v.size(); ++i)
          if (auto e = check(s.at("items"), v[i], at + "[" + std::to_string(i) + "]"); !e.empty()) return e;
    }
    if (v.is_object()) {
      if (s.contains("required"))
        for (const auto& k : s.at("required"))
          if (!v.contains(k.get<std::string>())) return at + ": missing " + k.get<std::string>();
      const bool closed = s.contains("additionalProperties") && s.at("additionalProperties") == false;
      for (const auto& [k, val] : v.items()) {
        if (s.contains("properties") && s.at("properties").contains(k)) {
          if (auto e = check(s.at("properties").at(k), val, at + "." + k); !e.empty()) return e;
        } else if (closed) {
          return at + ": unexpected " + k;
        }
      }
    }
    return "";
  }

  nlohmann::json root_;
};

}  // namespace oracle
