#pragma once

// File plumbing shared by the CLI: atomic writes, CSV formatting and the
// per-command run manifest.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bbridge/numerics.hpp"
#include "bbridge/schedules.hpp"

namespace bbridge {

inline constexpr std::string_view kLibraryVersion = "0.3.0";

/// Writes to "<path>.tmp" and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

/// Shortest round-trip decimal form ("%.17g" trimmed), locale independent.
std::string format_real(double x);

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);
  CsvWriter& row(std::initializer_list<std::string> cells);
  CsvWriter& row(const std::vector<std::string>& cells);
  const std::string& str() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
  double real(std::size_t row, std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);

std::string schedule_csv(const Schedule& schedule);

/// Header k,t,coord_0..coord_{D-1}.
std::string trajectory_csv(const std::vector<Tensor>& trajectory, const Schedule& schedule);

/// Pretty JSON with a trailing newline; key order is insertion independent
/// (nlohmann sorts object keys), so equal content gives equal bytes.
std::string dump_json(const nlohmann::json& j);

/// One manifest per artifact-producing command.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  nlohmann::json extra = nlohmann::json::object();
  std::string started_utc;
  std::string finished_utc;

  nlohmann::json to_json() const;
};

std::string utc_timestamp();

/// Manifest keys carrying wall-clock values; everything else is a pure
/// function of the command line.
inline const std::vector<std::string> kWallClockManifestKeys{"started_utc", "finished_utc"};

}  // namespace bbridge
