#include "mcsle/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mcsle/errors.hpp"

namespace mcsle {

namespace {

[[noreturn]] void bad(std::string_view where, std::string_view field, const std::string& msg) {
  std::string f = std::string(where) + "." + std::string(field);
  throw Error(ErrorKind::InvalidConfig, f + ": " + msg, f);
}

double number(const json& j, std::string_view where, std::string_view field) {
  auto it = j.find(std::string(field));
  if (it == j.end()) bad(where, field, "missing");
  if (!it->is_number()) bad(where, field, "expected a number");
  double v = it->get<double>();
  if (!std::isfinite(v)) bad(where, field, "not finite");
  return v;
}

double number_or(const json& j, std::string_view where, std::string_view field, double fallback) {
  return j.contains(std::string(field)) ? number(j, where, field) : fallback;
}

}  // namespace

DomainSpec parse_domain_spec(const json& j, std::string_view where) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, std::string(where) + ": expected an object", std::string(where));
  static const std::vector<std::string> known = {"outer_radius", "mesh", "holes", "x_angle", "y_angle", "mode", "annulus"};
  for (auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) bad(where, k, "unknown field");

  DomainSpec spec;
  spec.mesh = number(j, where, "mesh");
  if (!(spec.mesh > 0.0)) bad(where, "mesh", "must be positive");
  if (j.contains("mode")) {
    const json& m = j["mode"];
    if (m == "non-crossing") spec.mode = Mode::NonCrossing;
    else if (m == "crossing") spec.mode = Mode::Crossing;
    else bad(where, "mode", "expected \"non-crossing\" or \"crossing\"");
  }
  if (j.contains("annulus")) {
    const json& a = j["annulus"];
    std::string w = std::string(where) + ".annulus";
    if (!a.is_object()) bad(where, "annulus", "expected an object");
    double p = number(a, w, "p");
    if (!(p > 0.0)) bad(w, "p", "must be positive");
    double alpha = number_or(a, w, "alpha", 0.0);
    if (!(alpha >= 0.0 && alpha < 1.0)) bad(w, "alpha", "must lie in [0, 1)");
    if (j.contains("holes") || j.contains("outer_radius")) bad(where, "annulus", "cannot be combined with holes");
    spec.outer_radius = 1.0;
    spec.holes = {Hole{{0.0, 0.0}, std::exp(-p)}};
    spec.angle_x = number_or(j, where, "x_angle", 0.0);
    spec.angle_y = spec.mode == Mode::Crossing ? spec.angle_x + 2.0 * 3.14159265358979323846 * alpha
                                               : number_or(j, where, "y_angle", spec.angle_x + 3.14159265358979323846);
    return spec;
  }
  spec.outer_radius = number_or(j, where, "outer_radius", 1.0);
  if (!(spec.outer_radius > 0.0)) bad(where, "outer_radius", "must be positive");
  spec.angle_x = number_or(j, where, "x_angle", 0.0);
  spec.angle_y = number_or(j, where, "y_angle", 3.14159265358979323846);
  if (j.contains("holes")) {
    const json& hs = j["holes"];
    if (!hs.is_array()) bad(where, "holes", "expected an array");
    for (std::size_t k = 0; k < hs.size(); ++k) {
      std::string w = std::string(where) + ".holes[" + std::to_string(k) + "]";
      const json& h = hs[k];
      if (!h.is_object()) throw Error(ErrorKind::InvalidConfig, w + ": expected an object", w);
      auto c = h.find("center");
      if (c == h.end()) bad(w, "center", "missing");
      if (!c->is_array() || c->size() != 2 || !(*c)[0].is_number() || !(*c)[1].is_number())
        bad(w, "center", "expected [x, y]");
      Hole hole;
      hole.center = {(*c)[0].get<double>(), (*c)[1].get<double>()};
      hole.radius = number(h, w, "radius");
      if (!(hole.radius > 0.0)) bad(w, "radius", "must be positive");
      spec.holes.push_back(hole);
    }
  }
  return spec;
}

json to_json(const DomainSpec& spec) {
  json j;
  j["outer_radius"] = spec.outer_radius;
  j["mesh"] = spec.mesh;
  j["x_angle"] = spec.angle_x;
  j["y_angle"] = spec.angle_y;
  j["mode"] = spec.mode == Mode::Crossing ? "crossing" : "non-crossing";
  j["holes"] = json::array();
  for (const Hole& h : spec.holes) j["holes"].push_back({{"center", {h.center.x, h.center.y}}, {"radius", h.radius}});
  return j;
}

json read_json_file(const std::filesystem::path& path, std::string_view field) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot read " + path.string(), std::string(field));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidConfig, path.string() + ": " + e.what(), std::string(field));
  }
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
    : path_(path), columns_(header.size()) {
  for (auto h : header) *this << h;
  end_row();
}

void CsvWriter::sep() {
  if (col_++ > 0) buf_ += ',';
}

CsvWriter& CsvWriter::operator<<(double v) {
  sep();
  buf_ += format_number(v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(long long v) {
  sep();
  buf_ += std::to_string(v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::string_view s) {
  sep();
  buf_ += s;
  return *this;
}

void CsvWriter::end_row() {
  if (col_ != columns_) throw Error(ErrorKind::InvalidArgument, "CSV row width differs from the header");
  buf_ += '\n';
  col_ = 0;
}

void CsvWriter::close() {
  if (closed_) return;
  closed_ = true;
  std::ofstream out(path_, std::ios::binary);
  out << buf_;
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path_.string());
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

}  // namespace mcsle
