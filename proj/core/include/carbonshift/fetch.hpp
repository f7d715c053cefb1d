#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace carbonshift {

struct Warning {
  std::string context;
  std::string message;
};

// Generic HTTP+JSON intensity fetcher. The endpoint is a template with
// {region}, {start}, {end} placeholders; the response is either a JSON array
// of points or an object wrapping one (field "history" or "data"). Point
// field names default to zone / datetime / carbonIntensity and can be remapped.
struct FetchConfig {
  std::string endpoint;
  std::vector<std::string> regions;
  std::string start;  // ISO-8601 UTC hour, inclusive
  std::string end;    // exclusive
  std::map<std::string, std::string> field_map;  // logical name -> response name
  std::string array_field;                       // wrapper field; empty = autodetect
  std::string token_env = "CARBON_API_TOKEN";
  std::string token_header = "auth-token";
  int attempts = 3;
  int backoff_base_ms = 250;
};

struct FetchResult {
  std::vector<std::filesystem::path> written;
  std::vector<std::filesystem::path> skipped;  // already complete
  std::vector<Warning> warnings;               // one per failed region
  bool ok = true;
};

// Writes one canonical CSV per region into out_dir, exactly as returned (no
// gap fill; the trace loader interpolates on read). A region whose file
// already covers [start, end) is skipped. Transient failures retry with
// exponential backoff; a region that still fails is reported in warnings and
// flips ok, without stopping the other regions.
FetchResult fetch_traces(const FetchConfig& config, const std::filesystem::path& out_dir);

}  // namespace carbonshift
