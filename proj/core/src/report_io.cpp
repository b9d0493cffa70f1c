#include "dpmlab/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace dpmlab {

std::string format_double(double value) {
  if (std::isnan(value)) return "\"nan\"";
  if (std::isinf(value)) return value > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

void write(std::ostringstream& os, const Json& v, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(2 * depth), ' ');
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {  // std::map keeps keys sorted
        if (!first) os << ",\n";
        first = false;
        os << pad << Json(it.key()).dump() << ": ";
        write(os, it.value(), depth + 1);
      }
      os << "\n" << close_pad << "}";
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        os << "[]";
        return;
      }
      bool scalar = true;
      for (const auto& e : v)
        if (e.is_structured()) scalar = false;
      if (scalar) {
        os << "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) os << ", ";
          write(os, v[i], depth + 1);
        }
        os << "]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        write(os, v[i], depth + 1);
      }
      os << "\n" << close_pad << "]";
      return;
    }
    case Json::value_t::number_float:
      os << format_double(v.get<double>());
      return;
    default:
      os << v.dump();
  }
}

}  // namespace

std::string canonical_json(const Json& value) {
  std::ostringstream os;
  write(os, value, 0);
  os << "\n";
  return os.str();
}

std::string sha1_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("sha1_hex: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string config_fingerprint(const Json& config) {
  const std::string body = canonical_json(config);
  // Same framing git uses for blob ids.
  return sha1_hex("blob " + std::to_string(body.size()) + '\0' + body);
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(const std::vector<double>& values) {
  if (values.size() != columns_.size()) throw std::invalid_argument("CsvTable: row width mismatch");
  rows_.push_back(values);
}

std::string CsvTable::to_string(const Json* header) const {
  std::ostringstream os;
  if (header) os << "# " << header->dump() << "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
  os << "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::string cell = format_double(row[i]);
      if (!cell.empty() && cell.front() == '"') cell = cell.substr(1, cell.size() - 2);
      os << (i ? "," : "") << cell;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace dpmlab
