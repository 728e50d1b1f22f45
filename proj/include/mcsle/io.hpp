#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mcsle/lattice_domain.hpp"

namespace mcsle {

using json = nlohmann::ordered_json;

// Domain description, either
//   {"outer_radius": 1, "mesh": 0.03125, "holes": [{"center": [x, y], "radius": r}],
//    "x_angle": 0, "y_angle": 3.14159, "mode": "non-crossing" | "crossing"}
// or {"annulus": {"p": 1, "alpha": 0}, "mesh": ..., "mode": ...}.
// Errors are InvalidConfig naming the offending field (prefixed by `where`).
DomainSpec parse_domain_spec(const json& j, std::string_view where = "domain");

json to_json(const DomainSpec& spec);

json read_json_file(const std::filesystem::path& path, std::string_view field);

// Numbers in CSV and JSON text use the shortest round-trip form.
std::string format_number(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header);
  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(long long v);
  CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
  CsvWriter& operator<<(std::string_view s);
  void end_row();
  void close();
  ~CsvWriter();

 private:
  void sep();
  std::filesystem::path path_;
  std::string buf_;
  std::size_t columns_ = 0;
  std::size_t col_ = 0;
  bool closed_ = false;
};

void write_json_file(const std::filesystem::path& path, const json& j);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace mcsle
