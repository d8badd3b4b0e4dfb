#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "soft_stewart/config.hpp"

namespace soft_stewart {

/// Independent stream seed derived from a master seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Shortest %g form that reads back to the same double.
std::string format_number(double v);

/// Comma-separated rows with a header, written in one piece.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& row(const std::vector<double>& values);
  /// Mixed text and numbers; text must not contain commas or quotes.
  CsvTable& row(const std::vector<std::string>& cells);
  std::string str() const;
  std::size_t rows() const { return rows_; }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

/// One experiment's output directory: <root>/<run id>/ with manifest.json
/// listing every other file. The id depends only on kind, seed and config,
/// so a rerun lands in the same place.
class RunDirectory {
 public:
  RunDirectory(const std::filesystem::path& root, const std::string& kind, std::uint64_t seed,
               const ExperimentConfig& cfg);

  const std::filesystem::path& path() const { return dir_; }
  const std::string& run_id() const { return run_id_; }
  const std::string& config_hash() const { return hash_; }

  void write_text(const std::string& relative, const std::string& content);
  void write_csv(const std::string& relative, const CsvTable& table) { write_text(relative, table.str()); }
  void write_json(const std::string& relative, const nlohmann::json& j);

  /// Writes manifest.json. Call once, after every output.
  void finish();
  const std::vector<std::string>& outputs() const { return outputs_; }

  static std::string make_run_id(const std::string& kind, std::uint64_t seed, const std::string& config_hash);

 private:
  std::filesystem::path dir_;
  std::string kind_;
  std::uint64_t seed_;
  std::string hash_;
  std::string run_id_;
  std::string started_;
  std::vector<std::string> outputs_;
};

/// UTC time as ISO 8601 with milliseconds.
std::string utc_timestamp();

}  // namespace soft_stewart
