#pragma once

// CSV dialect: comma separated, '.' decimal point, 17 significant digits, one header row,
// '#'-prefixed comment lines.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "symbranch/errors.hpp"

namespace symbranch {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Write to a sibling temp file, then rename over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid()) + "-" +
         std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(bool(out), ErrorCode::Io, "cannot open " + tmp.string());
    out << contents;
    out.flush();
    require(bool(out), ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    fail(ErrorCode::Io, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void comment(const std::string& text) { comments_.push_back(text); }

  // Cells are preformatted so text columns (regime labels, paths) can sit next to numbers.
  void row(std::vector<std::string> cells) {
    require(cells.size() == columns_.size(), ErrorCode::InvalidArgument, "CSV row width mismatch");
    rows_.push_back(std::move(cells));
  }

  void write(std::ostream& out) const {
    for (const auto& c : comments_) out << "# " << c << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
    out << '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << '\n';
    }
  }

  std::string str() const {
    std::string s;
    for (const auto& c : comments_) s += "# " + c + '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) s += (i ? "," : "") + columns_[i];
    s += '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + r[i];
      s += '\n';
    }
    return s;
  }

  std::size_t size() const noexcept { return rows_.size(); }

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> comments_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace symbranch
