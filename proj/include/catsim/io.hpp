#pragma once

// Text artifacts: full-precision number formatting, CSV/JSON-lines sinks and
// the sidecar run manifest.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "catsim/errors.hpp"

#ifndef CATSIM_VERSION
#define CATSIM_VERSION "0.0.0"
#endif

namespace catsim::io {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kVersion = CATSIM_VERSION;

/// Shortest-safe round-trip representation: always 17 significant digits.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// UTC ISO-8601 timestamp. SOURCE_DATE_EPOCH, when set, pins it so reruns
/// produce byte-identical manifests.
inline std::string timestamp_utc() {
  std::time_t t = std::time(nullptr);
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != env && *end == '\0') t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Manifest skeleton; callers add "parameters" and "files".
inline Json make_manifest(std::string_view command, std::uint64_t seed = 0) {
  Json m;
  m["tool"] = "catsim";
  m["version"] = std::string(kVersion);
  m["command"] = std::string(command);
  m["master_seed"] = seed;
  m["created_utc"] = timestamp_utc();
  m["conventions"] = {
      {"spin_operators", "Pauli sums: Sz = sum_l sigma_z(l), eigenvalues -N..N step 2"},
      {"catness", "1/2 ||[Sz,[Sz,rho]]||_1"},
      {"reference_ideal", "sum_M P(M) ||[Sz,[Sz,rho_M]]||_1 (no 1/2)"},
      {"number_format", "%.17g"},
  };
  return m;
}

/// Writes a file, creating parent directories. Throws on I/O failure.
inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline void write_manifest(const std::filesystem::path& path, const Json& manifest) {
  write_text(path, manifest.dump(2) + "\n");
}

/// CSV with a header row. Cells are preformatted strings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw ContractViolation("CSV row width mismatch");
    rows_.push_back(std::move(cells));
    return *this;
  }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// One compact JSON object per line.
inline std::string jsonl_line(const Json& j) { return j.dump() + "\n"; }

// ---------------------------------------------------------------------------
// CSV input (for fit)

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw ConfigError("CSV has no column '" + std::string(name) + "'");
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline CsvData read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  CsvData data;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (data.header.empty()) {
      data.header = split_csv_line(line);
      continue;
    }
    auto cells = split_csv_line(line);
    if (cells.size() != data.header.size()) {
      throw ConfigError(path.string() + ": row width does not match header");
    }
    data.rows.push_back(std::move(cells));
  }
  if (data.header.empty()) throw ConfigError(path.string() + " is empty");
  return data;
}

inline double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

}  // namespace catsim::io
