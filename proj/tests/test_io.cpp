#include <doctest.h>

#include <filesystem>
#include <stdexcept>

#include "carbonshift/io.hpp"

using namespace carbonshift;

TEST_CASE("parse_utc_hour accepts canonical timestamps") {
  CHECK(parse_utc_hour("1970-01-01T00:00:00Z") == 0);
  CHECK(parse_utc_hour("1970-01-01T01:00:00Z") == 1);
  CHECK(parse_utc_hour("1970-01-02T00:00:00Z") == 24);
  CHECK(parse_utc_hour("1969-12-31T23:00:00Z") == -1);
  CHECK(parse_utc_hour("2021-01-01T00:00:00Z") == 447072);
}

TEST_CASE("parse_utc_hour floors minutes and seconds") {
  CHECK(parse_utc_hour("1970-01-01T00:59:59Z") == 0);
  CHECK(parse_utc_hour("2021-01-01T05:30:00Z") == parse_utc_hour("2021-01-01T05:00:00Z"));
}

TEST_CASE("parse_utc_hour validates the calendar") {
  CHECK_THROWS_AS(parse_utc_hour("2021-02-29T00:00:00Z"), std::invalid_argument);
  CHECK(parse_utc_hour("2020-02-29T00:00:00Z") > 0);  // leap year
  CHECK_THROWS_AS(parse_utc_hour("2021-13-01T00:00:00Z"), std::invalid_argument);
  CHECK_THROWS_AS(parse_utc_hour("2021-00-01T00:00:00Z"), std::invalid_argument);
  CHECK_THROWS_AS(parse_utc_hour("2021-04-31T00:00:00Z"), std::invalid_argument);
  CHECK_THROWS_AS(parse_utc_hour("2021-01-01T24:00:00Z"), std::invalid_argument);
}

TEST_CASE("parse_utc_hour rejects other shapes") {
  CHECK_THROWS_AS(parse_utc_hour(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_utc_hour("2021-01-01"), std::invalid_argument);
  CHECK_THROWS_AS(parse_utc_hour("2021-01-01T00:00:00"), std::invalid_argument);
  CHECK_THROWS_AS(parse_utc_hour("2021-01-01 00:00:00Z"), std::invalid_argument);
  CHECK_THROWS_AS(parse_utc_hour("2021-01-01T00:00:00+01:00"), std::invalid_argument);
  CHECK_THROWS_AS(parse_utc_hour("21-01-01T00:00:00Z"), std::invalid_argument);
}

TEST_CASE("format_utc_hour inverts parse_utc_hour") {
  for (EpochHour h : {EpochHour(0), EpochHour(447072), EpochHour(-1), EpochHour(999999)}) {
    CHECK(parse_utc_hour(format_utc_hour(h)) == h);
  }
  CHECK(format_utc_hour(0) == "1970-01-01T00:00:00Z");
  CHECK(format_utc_hour(447072) == "2021-01-01T00:00:00Z");
}

TEST_CASE("format_double round-trips") {
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(1.5) == "1.5");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(368.39) == "368.39");
}

TEST_CASE("format_fixed pins decimals") {
  CHECK(format_fixed(1.0) == "1.000000");
  CHECK(format_fixed(1.23456789) == "1.234568");
  CHECK(format_fixed(2.5, 2) == "2.50");
}

TEST_CASE("split_csv_line trims fields") {
  const auto fields = split_csv_line(" a , b\t,c\r");
  REQUIRE(fields.size() == 3);
  CHECK(fields[0] == "a");
  CHECK(fields[1] == "b");
  CHECK(fields[2] == "c");
  CHECK(split_csv_line("").size() == 1);
  CHECK(split_csv_line("x,,y")[1] == "");
}

TEST_CASE("write_file_atomic creates parents and round-trips") {
  const auto dir = std::filesystem::temp_directory_path() / "carbonshift_io_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "nested" / "file.txt";
  write_file_atomic(path, "hello\n");
  CHECK(read_text_file(path) == "hello\n");
  write_file_atomic(path, "replaced\n");
  CHECK(read_text_file(path) == "replaced\n");
  CHECK(!std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("read_text_file reports missing files") {
  CHECK_THROWS(read_text_file("/nonexistent/carbonshift/file.txt"));
}
