#pragma once
// CSV and JSON artifacts.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace omk {

// Row-oriented CSV with a fixed header; numbers are written round-trip exact.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& add(double v);
  CsvTable& add(long v);
  CsvTable& add(int v) { return add(static_cast<long>(v)); }
  CsvTable& add(std::size_t v) { return add(static_cast<long>(v)); }
  CsvTable& add(bool v) { return add(static_cast<long>(v)); }
  CsvTable& add(std::string_view v);
  CsvTable& add(const char* v) { return add(std::string_view(v)); }
  void end_row();

  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::string> current_;
};

std::string format_double(double v);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// 64-bit FNV-1a, used to fingerprint scenarios in manifests.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

const char* code_version();

}  // namespace omk
