#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace dpmlab {

using Json = nlohmann::json;

// Sorted keys, two-space indent, every double printed with 17 significant digits.
std::string canonical_json(const Json& value);

// 17 significant digits; integers that fit exactly are still printed in %.17g form.
std::string format_double(double value);

// Hex SHA-1 of the canonical form of `config`, in the style of a git object id.
std::string config_fingerprint(const Json& config);

std::string sha1_hex(const std::string& bytes);

void write_text_file(const std::filesystem::path& path, const std::string& contents);

// CSV writer used for scan and ladder tables. Values are formatted with format_double.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);
  void add_row(const std::vector<double>& values);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<double>>& data() const { return rows_; }
  // Optional leading comment line holding a JSON header.
  std::string to_string(const Json* header = nullptr) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace dpmlab
