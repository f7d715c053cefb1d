#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace carbonshift {

// Hours since the Unix epoch, always UTC.
using EpochHour = std::int64_t;

// Parses "YYYY-MM-DDTHH:MM:SSZ" and floors to the hour.
// Throws std::invalid_argument on any other shape or out-of-range field.
EpochHour parse_utc_hour(std::string_view iso8601);

// Inverse of parse_utc_hour, minutes and seconds always ":00:00".
std::string format_utc_hour(EpochHour hour);

// Shortest representation that round-trips through a double.
std::string format_double(double value);

// Fixed-point with the given number of decimals, for report files.
std::string format_fixed(double value, int decimals = 6);

// Splits one CSV line on commas and trims ASCII whitespace from each field.
// Quoting is not supported; none of the file formats here need it.
std::vector<std::string> split_csv_line(std::string_view line);

std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over the target, so readers
// never observe a half-written file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace carbonshift
