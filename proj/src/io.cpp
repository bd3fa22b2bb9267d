#include "bbridge/io.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bbridge {

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) { row(header); }

CsvWriter& CsvWriter::row(std::initializer_list<std::string> cells) { return row(std::vector<std::string>(cells)); }

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::invalid_argument("csv row has wrong column count");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
  return *this;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::out_of_range("csv has no column '" + std::string(name) + "'");
}

double CsvTable::real(std::size_t r, std::string_view name) const {
  const std::string& cell = rows.at(r).at(column(name));
  double v = 0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc()) throw std::invalid_argument("not a number: '" + cell + "'");
  return v;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  bool first = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.emplace_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

std::string schedule_csv(const Schedule& schedule) {
  CsvWriter csv({"i", "t"});
  for (std::size_t i = 0; i <= schedule.steps(); ++i) csv.row({std::to_string(i), format_real(schedule[i])});
  return csv.str();
}

std::string trajectory_csv(const std::vector<Tensor>& trajectory, const Schedule& schedule) {
  if (trajectory.size() != schedule.steps() + 1) throw std::invalid_argument("trajectory/schedule length mismatch");
  std::vector<std::string> header{"k", "t"};
  const Index dim = trajectory.front().size();
  for (Index i = 0; i < dim; ++i) header.push_back("coord_" + std::to_string(i));
  CsvWriter csv(header);
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    std::vector<std::string> cells{std::to_string(k), format_real(schedule[k])};
    for (Index i = 0; i < dim; ++i) cells.push_back(format_real(trajectory[k][i]));
    csv.row(cells);
  }
  return csv.str();
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config;
  j["seed"] = seed;
  j["library_version"] = std::string(kLibraryVersion);
  j["outputs"] = outputs;
  if (!extra.empty()) j["extra"] = extra;
  j["started_utc"] = started_utc;
  j["finished_utc"] = finished_utc;
  return j;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace bbridge
