#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ircloud/core.hpp"

#ifndef IRCLOUD_VERSION
#define IRCLOUD_VERSION "0.0.0"
#endif

/// Deterministic output: number formatting, digests, atomic file writes.
namespace ircloud::io {

inline constexpr const char* kVersion = IRCLOUD_VERSION;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Shortest round-trip decimal form.
inline std::string number(double v) {
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// Writes through a sibling temporary file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string header_line(const std::string& digest) {
  return std::string("# ircloud ") + kVersion + " config-digest=" + digest + "\n";
}

/// CSV table with the comment header as its first line.
class CsvTable {
 public:
  CsvTable(std::string digest, std::vector<std::string> columns)
      : digest_(std::move(digest)), columns_(std::move(columns)) {}

  void add_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) throw Error("CsvTable: row width does not match the header");
    rows_.push_back(cells);
  }

  std::string str() const {
    std::ostringstream out;
    out << header_line(digest_);
    for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
    out << '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << '\n';
    }
    return out.str();
  }

 private:
  std::string digest_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// JSON document whose first member is the provenance object {"ircloud", "config_digest"}.
inline nlohmann::ordered_json json_document(const std::string& digest) {
  nlohmann::ordered_json doc;
  doc["meta"] = {{"ircloud", kVersion}, {"config_digest", digest}};
  return doc;
}

inline std::string dump(const nlohmann::ordered_json& doc) { return doc.dump(2) + "\n"; }

}  // namespace ircloud::io
