#include "soft_stewart/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace soft_stewart {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  if (header.empty()) throw std::invalid_argument("csv: empty header");
  row(header);
  rows_ = 0;
}

CsvTable& CsvTable::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  return row(cells);
}

CsvTable& CsvTable::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::invalid_argument("csv: row width does not match the header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].find_first_of(",\"\n") != std::string::npos) throw std::invalid_argument("csv: cell needs quoting");
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
  ++rows_;
  return *this;
}

std::string CsvTable::str() const { return text_; }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

std::string RunDirectory::make_run_id(const std::string& kind, std::uint64_t seed, const std::string& config_hash) {
  return kind + "-s" + std::to_string(seed) + "-" + config_hash.substr(0, 12);
}

RunDirectory::RunDirectory(const std::filesystem::path& root, const std::string& kind, std::uint64_t seed,
                           const ExperimentConfig& cfg)
    : kind_(kind), seed_(seed), hash_(soft_stewart::config_hash(cfg)), started_(utc_timestamp()) {
  run_id_ = make_run_id(kind, seed, hash_);
  dir_ = root / run_id_;
  std::filesystem::create_directories(dir_);
  write_json("config.json", config_to_json(cfg));
}

void RunDirectory::write_text(const std::string& relative, const std::string& content) {
  const std::filesystem::path p = dir_ / relative;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << content;
  if (!f) throw std::runtime_error("write failed: " + p.string());
  if (std::find(outputs_.begin(), outputs_.end(), relative) == outputs_.end()) outputs_.push_back(relative);
}

void RunDirectory::write_json(const std::string& relative, const nlohmann::json& j) {
  write_text(relative, j.dump(2) + "\n");
}

void RunDirectory::finish() {
  std::vector<std::string> files = outputs_;
  std::sort(files.begin(), files.end());
  nlohmann::json m;
  m["run_id"] = run_id_;
  m["kind"] = kind_;
  m["seed"] = seed_;
  m["config_hash"] = hash_;
  m["started"] = started_;
  m["finished"] = utc_timestamp();
  m["outputs"] = files;
  const std::filesystem::path p = dir_ / "manifest.json";
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << m.dump(2) << "\n";
}

}  // namespace soft_stewart
