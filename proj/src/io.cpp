#include "omk/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "omk/errors.hpp"

#ifndef OMK_VERSION
#define OMK_VERSION "unknown"
#endif

namespace omk {

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::add(double v) {
  current_.push_back(format_double(v));
  return *this;
}

CsvTable& CsvTable::add(long v) {
  current_.push_back(std::to_string(v));
  return *this;
}

CsvTable& CsvTable::add(std::string_view v) {
  if (v.find_first_of(",\"\n") == std::string_view::npos) {
    current_.emplace_back(v);
  } else {
    std::string q = "\"";
    for (char c : v) {
      if (c == '"') q += '"';
      q += c;
    }
    current_.push_back(q + '"');
  }
  return *this;
}

void CsvTable::end_row() {
  if (current_.size() != header_.size())
    throw std::logic_error("CSV row has " + std::to_string(current_.size()) + " fields, header has " +
                           std::to_string(header_.size()));
  rows_.push_back(std::move(current_));
  current_.clear();
}

std::string CsvTable::str() const {
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return os.str();
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot write " + path.string());
  f << str();
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot read " + path.string());
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const char* code_version() { return OMK_VERSION; }

}  // namespace omk
