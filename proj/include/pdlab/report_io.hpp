#pragma once

// CSV (RFC 4180) and number formatting shared by every exporter.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pdlab/extended_real.hpp"

namespace pdlab::io {

/// Shortest round-trip is not required; 17 significant digits always are.
/// Non-finite values become inf, -inf and nan.
std::string format_double(double x);
std::string format_extended(const ExtendedReal& x);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

/// Row-oriented writer. Rows end with CRLF.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::vector<std::string> header);

  CsvWriter& field(std::string_view s);
  CsvWriter& field(const char* s) { return field(std::string_view(s)); }
  CsvWriter& field(double x);
  CsvWriter& field(const ExtendedReal& x);
  CsvWriter& field(long long x);
  CsvWriter& field(int x) { return field(static_cast<long long>(x)); }
  CsvWriter& field(std::size_t x) { return field(static_cast<long long>(x)); }
  CsvWriter& field(bool b) { return field(std::string_view(b ? "true" : "false")); }
  void end_row();

  std::size_t columns() const { return columns_; }
  std::size_t rows() const { return rows_; }

 private:
  void sep();
  std::ostream& os_;
  std::size_t columns_ = 0;
  std::size_t in_row_ = 0;
  std::size_t rows_ = 0;
};

/// Opens `path` for writing, creating parent directories. Throws
/// std::runtime_error on failure.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace pdlab::io
