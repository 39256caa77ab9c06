#include "pdlab/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pdlab::io {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_extended(const ExtendedReal& x) { return format_double(x.to_double()); }

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(std::ostream& os, std::vector<std::string> header)
    : os_(os), columns_(header.size()) {
  if (header.empty()) throw std::invalid_argument("csv header must not be empty");
  for (const auto& h : header) field(std::string_view(h));
  end_row();
  rows_ = 0;
}

void CsvWriter::sep() {
  if (in_row_ >= columns_) throw std::logic_error("csv row has too many fields");
  if (in_row_ > 0) os_ << ',';
  ++in_row_;
}

CsvWriter& CsvWriter::field(std::string_view s) {
  sep();
  os_ << csv_escape(s);
  return *this;
}

CsvWriter& CsvWriter::field(double x) {
  sep();
  os_ << format_double(x);
  return *this;
}

CsvWriter& CsvWriter::field(const ExtendedReal& x) { return field(x.to_double()); }

CsvWriter& CsvWriter::field(long long x) {
  sep();
  os_ << x;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw std::logic_error("csv row has too few fields");
  os_ << "\r\n";
  in_row_ = 0;
  ++rows_;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return os;
}

}  // namespace pdlab::io
