#include "carbonshift/io.hpp"

#include <array>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace carbonshift {

namespace {

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

unsigned last_day_of_month(std::int64_t y, unsigned m) {
  static constexpr std::array<unsigned, 12> days = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && (y % 4 == 0 && (y % 100 != 0 || y % 400 == 0))) return 29;
  return days[m - 1];
}

bool parse_uint(std::string_view s, unsigned& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

[[noreturn]] void bad_timestamp(std::string_view s) {
  throw std::invalid_argument("bad timestamp '" + std::string(s) +
                              "': expected YYYY-MM-DDTHH:MM:SSZ");
}

}  // namespace

EpochHour parse_utc_hour(std::string_view s) {
  // YYYY-MM-DDTHH:MM:SSZ, 20 chars, year may be wider.
  if (s.size() < 20 || s.back() != 'Z') bad_timestamp(s);
  const std::size_t t = s.find('T');
  if (t == std::string_view::npos) bad_timestamp(s);
  const std::string_view date = s.substr(0, t);
  const std::string_view time = s.substr(t + 1, s.size() - t - 2);

  if (date.size() < 10 || date[date.size() - 3] != '-' || date[date.size() - 6] != '-') bad_timestamp(s);
  std::int64_t year = 0;
  unsigned month = 0, day = 0;
  if (!parse_int(date.substr(0, date.size() - 6), year) ||
      !parse_uint(date.substr(date.size() - 5, 2), month) ||
      !parse_uint(date.substr(date.size() - 2, 2), day))
    bad_timestamp(s);

  if (time.size() != 8 || time[2] != ':' || time[5] != ':') bad_timestamp(s);
  unsigned hh = 0, mm = 0, ss = 0;
  if (!parse_uint(time.substr(0, 2), hh) || !parse_uint(time.substr(3, 2), mm) ||
      !parse_uint(time.substr(6, 2), ss))
    bad_timestamp(s);

  if (month < 1 || month > 12 || day < 1 || day > last_day_of_month(year, month)) bad_timestamp(s);
  if (hh > 23 || mm > 59 || ss > 60) bad_timestamp(s);

  return days_from_civil(year, month, day) * 24 + hh;
}

std::string format_utc_hour(EpochHour hour) {
  std::int64_t day = hour / 24;
  std::int64_t h = hour % 24;
  if (h < 0) {
    h += 24;
    day -= 1;
  }
  std::int64_t y = 0;
  unsigned m = 0, d = 0;
  civil_from_days(day, y, m, d);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:00:00Z",
                static_cast<long long>(y), m, d, static_cast<long long>(h));
  return buf;
}

std::string format_double(double value) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, p);
}

std::string format_fixed(double value, int decimals) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string_view f = comma == std::string_view::npos ? line.substr(start)
                                                         : line.substr(start, comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t' || f.front() == '\r')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
    fields.emplace_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  const auto parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("rename " + tmp + " -> " + path.string() + ": " + ec.message());
  }
}

}  // namespace carbonshift
