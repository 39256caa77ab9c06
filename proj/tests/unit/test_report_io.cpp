#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <sstream>

#include "pdlab/report_io.hpp"

using namespace pdlab::io;

TEST(FormatDouble, SeventeenDigitsRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(-2.5e-300), "-2.5e-300");
  for (double x : {std::numbers::pi, 1.0 / 3.0, 6.02214076e23, 2.2250738585072014e-308}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_extended(pdlab::ExtendedReal::infinity()), "inf");
  EXPECT_EQ(format_extended(pdlab::ExtendedReal(0.5)), "0.5");
}

TEST(CsvEscape, QuotesOnlyWhenNeeded) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_escape("two\nlines"), "\"two\nlines\"");
  EXPECT_EQ(csv_escape(""), "");
}

TEST(CsvWriter, RowsAndColumnCount) {
  std::ostringstream os;
  {
    CsvWriter csv(os, {"name", "value", "ok"});
    csv.field("x,y").field(0.25).field(true);
    csv.end_row();
    csv.field("n").field(3).field(false);
    csv.end_row();
    EXPECT_EQ(csv.rows(), 2u);
    EXPECT_EQ(csv.columns(), 3u);
  }
  EXPECT_EQ(os.str(), "name,value,ok\r\n\"x,y\",0.25,true\r\nn,3,false\r\n");

  std::ostringstream bad;
  CsvWriter short_row(bad, {"a", "b"});
  short_row.field(1.0);
  EXPECT_THROW(short_row.end_row(), std::logic_error);
  CsvWriter long_row(bad, {"a"});
  long_row.field(1.0);
  EXPECT_THROW(long_row.field(2.0), std::logic_error);
}

TEST(OpenOutput, CreatesParents) {
  const auto dir = std::filesystem::temp_directory_path() / "pdlab_io_test";
  std::filesystem::remove_all(dir);
  {
    auto f = open_output(dir / "nested" / "file.csv");
    f << "x\r\n";
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "nested" / "file.csv"));
  std::filesystem::remove_all(dir);
}
