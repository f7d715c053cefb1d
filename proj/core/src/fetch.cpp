#include "carbonshift/fetch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "carbonshift/io.hpp"
#include "carbonshift/trace.hpp"

namespace carbonshift {

namespace {

std::string url_encode(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xF];
    }
  }
  return out;
}

void substitute(std::string& s, const std::string& placeholder, const std::string& value) {
  const std::string encoded = url_encode(value);
  std::size_t pos = 0;
  while ((pos = s.find(placeholder, pos)) != std::string::npos) {
    s.replace(pos, placeholder.size(), encoded);
    pos += encoded.size();
  }
}

struct SplitUrl {
  std::string base;  // http://host[:port]
  std::string path;  // /path?query
};

SplitUrl split_url(const std::string& url) {
  constexpr const char* scheme = "http://";
  if (url.rfind(scheme, 0) != 0)
    throw std::invalid_argument("endpoint must start with http:// (got '" + url + "')");
  const std::size_t host_start = std::string(scheme).size();
  const std::size_t slash = url.find('/', host_start);
  SplitUrl s;
  if (slash == std::string::npos) {
    s.base = url;
    s.path = "/";
  } else {
    s.base = url.substr(0, slash);
    s.path = url.substr(slash);
  }
  return s;
}

std::string field_name(const FetchConfig& config, const char* logical) {
  auto it = config.field_map.find(logical);
  return it == config.field_map.end() ? std::string(logical) : it->second;
}

// Accepts fractional seconds by dropping them before the strict hour parse.
EpochHour parse_point_time(std::string datetime) {
  const std::size_t dot = datetime.find('.');
  if (dot != std::string::npos && datetime.back() == 'Z')
    datetime = datetime.substr(0, dot) + "Z";
  return parse_utc_hour(datetime);
}

struct FetchedPoint {
  EpochHour hour;
  double value;
};

std::vector<FetchedPoint> parse_response(const FetchConfig& config, const std::string& region,
                                         const std::string& body, std::vector<Warning>& warnings) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("response is not JSON: ") + e.what());
  }

  const nlohmann::json* arr = nullptr;
  if (j.is_array()) {
    arr = &j;
  } else if (j.is_object()) {
    if (!config.array_field.empty()) {
      if (!j.contains(config.array_field) || !j.at(config.array_field).is_array())
        throw std::runtime_error("response field '" + config.array_field + "' is not an array");
      arr = &j.at(config.array_field);
    } else {
      for (const char* candidate : {"history", "data"})
        if (j.contains(candidate) && j.at(candidate).is_array()) {
          arr = &j.at(candidate);
          break;
        }
      if (!arr) throw std::runtime_error("response has no 'history' or 'data' array");
    }
  } else {
    throw std::runtime_error("response is neither an array nor an object");
  }
  if (arr->empty()) throw std::runtime_error("response contains no points");

  const std::string zone_field = field_name(config, "zone");
  const std::string time_field = field_name(config, "datetime");
  const std::string ci_field = field_name(config, "carbonIntensity");

  std::vector<FetchedPoint> points;
  points.reserve(arr->size());
  bool zone_warned = false;
  for (const auto& p : *arr) {
    if (!p.is_object() || !p.contains(time_field) || !p.contains(ci_field))
      throw std::runtime_error("point lacks '" + time_field + "' or '" + ci_field + "'");
    if (!p.at(ci_field).is_number())
      throw std::runtime_error("'" + ci_field + "' is not a number");
    const double value = p.at(ci_field).get<double>();
    if (!std::isfinite(value) || value < 0.0)
      throw std::runtime_error("'" + ci_field + "' must be finite and non-negative");
    if (!zone_warned && p.contains(zone_field) && p.at(zone_field).is_string() &&
        p.at(zone_field).get<std::string>() != region) {
      warnings.push_back({region, "response zone '" + p.at(zone_field).get<std::string>() +
                                      "' differs from requested region"});
      zone_warned = true;
    }
    points.push_back({parse_point_time(p.at(time_field).get<std::string>()), value});
  }

  std::stable_sort(points.begin(), points.end(),
                   [](const FetchedPoint& a, const FetchedPoint& b) { return a.hour < b.hour; });
  std::vector<FetchedPoint> unique;
  unique.reserve(points.size());
  for (const auto& p : points) {
    if (!unique.empty() && unique.back().hour == p.hour) {
      if (unique.back().value != p.value)
        throw std::runtime_error("conflicting duplicate point at " + format_utc_hour(p.hour));
      continue;
    }
    unique.push_back(p);
  }
  return unique;
}

bool file_covers(const std::filesystem::path& path, const std::string& region, EpochHour start,
                 EpochHour end) {
  if (!std::filesystem::exists(path)) return false;
  try {
    const CarbonTrace trace = load_trace_file(path, region);
    return trace.start_hour <= start &&
           trace.start_hour + static_cast<EpochHour>(trace.size()) >= end;
  } catch (const std::exception&) {
    return false;  // unreadable or gappy beyond repair; refetch
  }
}

std::string fetch_body(const FetchConfig& config, const std::string& url) {
  const SplitUrl split = split_url(url);
  httplib::Headers headers;
  if (!config.token_env.empty()) {
    if (const char* token = std::getenv(config.token_env.c_str()); token && *token)
      headers.emplace(config.token_header, token);
  }

  std::string last_error;
  for (int attempt = 0; attempt < config.attempts; ++attempt) {
    if (attempt > 0) {
      const auto delay = std::chrono::milliseconds(
          static_cast<long long>(config.backoff_base_ms) * (1LL << (attempt - 1)));
      std::this_thread::sleep_for(delay);
    }
    httplib::Client client(split.base);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(30, 0);
    auto res = client.Get(split.path, headers);
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    return res->body;
  }
  throw std::runtime_error("giving up after " + std::to_string(config.attempts) + " attempts: " +
                           last_error);
}

}  // namespace

FetchResult fetch_traces(const FetchConfig& config, const std::filesystem::path& out_dir) {
  for (const char* placeholder : {"{region}", "{start}", "{end}"})
    if (config.endpoint.find(placeholder) == std::string::npos)
      throw std::invalid_argument(std::string("endpoint template lacks ") + placeholder);
  if (config.regions.empty()) throw std::invalid_argument("fetch: no regions requested");
  if (config.attempts < 1) throw std::invalid_argument("fetch: attempts must be >= 1");
  if (config.backoff_base_ms < 0) throw std::invalid_argument("fetch: negative backoff");
  const EpochHour start = parse_utc_hour(config.start);
  const EpochHour end = parse_utc_hour(config.end);
  if (start >= end) throw std::invalid_argument("fetch: start must precede end");

  FetchResult result;
  for (const auto& region : config.regions) {
    const auto path = out_dir / (region + ".csv");
    if (file_covers(path, region, start, end)) {
      result.skipped.push_back(path);
      continue;
    }
    try {
      std::string url = config.endpoint;
      substitute(url, "{region}", region);
      substitute(url, "{start}", config.start);
      substitute(url, "{end}", config.end);

      const auto points = parse_response(config, region, fetch_body(config, url), result.warnings);

      std::string csv = "timestamp,region_id,carbon_intensity\n";
      for (const auto& p : points)
        csv += format_utc_hour(p.hour) + "," + region + "," + format_double(p.value) + "\n";
      write_file_atomic(path, csv);
      result.written.push_back(path);
    } catch (const std::exception& e) {
      result.warnings.push_back({region, e.what()});
      result.ok = false;
    }
  }
  return result;
}

}  // namespace carbonshift
