#include "carbonshift/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "carbonshift/io.hpp"

namespace carbonshift {

double relative_savings(double baseline, double shifted) {
  if (!(baseline > 0.0))
    throw std::invalid_argument("relative_savings: baseline must be positive, got " +
                                format_double(baseline));
  if (shifted < 0.0)
    throw std::invalid_argument("relative_savings: shifted emissions must be non-negative");
  return 100.0 * (baseline - shifted) / baseline;
}

double relative_to_global(double absolute_per_hour, double global_avg) {
  if (!(global_avg > 0.0))
    throw std::invalid_argument("relative_to_global: global average must be positive");
  return 100.0 * absolute_per_hour / global_avg;
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean_std: empty series");
  double sum = 0.0;
  for (double v : values) sum += v;
  MeanStd m;
  m.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) {
    const double d = v - m.mean;
    ss += d * d;
  }
  m.std = std::sqrt(ss / static_cast<double>(values.size()));
  return m;
}

namespace {

struct Accumulator {
  std::vector<double> relative_pct, absolute, relative_to_global_pct;
};

Labels group_key(const SavingsReport& report, const std::vector<std::string>& group_by) {
  Labels key;
  for (const auto& k : group_by) {
    auto it = report.labels.find(k);
    key[k] = it == report.labels.end() ? std::string() : it->second;
  }
  return key;
}

}  // namespace

std::vector<AggregatedReport> aggregate(const std::vector<SavingsReport>& reports,
                                        const std::vector<std::string>& group_by) {
  std::map<Labels, Accumulator> groups;
  for (const auto& r : reports) {
    auto& acc = groups[group_key(r, group_by)];
    acc.relative_pct.push_back(r.relative_pct);
    acc.absolute.push_back(r.absolute);
    acc.relative_to_global_pct.push_back(r.relative_to_global_pct);
  }

  std::vector<AggregatedReport> out;
  out.reserve(groups.size());
  for (const auto& [key, acc] : groups) {
    AggregatedReport a;
    a.group = key;
    a.count = acc.relative_pct.size();
    a.relative_pct = mean_std(acc.relative_pct);
    a.absolute = mean_std(acc.absolute);
    a.relative_to_global_pct = mean_std(acc.relative_to_global_pct);
    out.push_back(std::move(a));
  }
  return out;
}

std::string to_csv(const std::vector<AggregatedReport>& reports,
                   const std::vector<std::string>& group_by) {
  std::string out;
  for (const auto& k : group_by) {
    out += k;
    out += ',';
  }
  out +=
      "count,relative_pct_mean,relative_pct_std,absolute_mean,absolute_std,"
      "relative_to_global_pct_mean,relative_to_global_pct_std\n";
  for (const auto& r : reports) {
    for (const auto& k : group_by) {
      out += r.group.at(k);
      out += ',';
    }
    out += std::to_string(r.count);
    out += ',';
    out += format_fixed(r.relative_pct.mean);
    out += ',';
    out += format_fixed(r.relative_pct.std);
    out += ',';
    out += format_fixed(r.absolute.mean);
    out += ',';
    out += format_fixed(r.absolute.std);
    out += ',';
    out += format_fixed(r.relative_to_global_pct.mean);
    out += ',';
    out += format_fixed(r.relative_to_global_pct.std);
    out += '\n';
  }
  return out;
}

std::string to_json(const std::vector<AggregatedReport>& reports,
                    const std::vector<std::string>& group_by) {
  nlohmann::json root = nlohmann::json::object();
  for (const auto& r : reports) {
    nlohmann::json* node = &root;
    for (const auto& k : group_by) node = &(*node)[r.group.at(k)];
    (*node)["count"] = r.count;
    (*node)["relative_pct"] = {{"mean", r.relative_pct.mean}, {"std", r.relative_pct.std}};
    (*node)["absolute"] = {{"mean", r.absolute.mean}, {"std", r.absolute.std}};
    (*node)["relative_to_global_pct"] = {{"mean", r.relative_to_global_pct.mean},
                                         {"std", r.relative_to_global_pct.std}};
  }
  return root.dump(2) + "\n";
}

}  // namespace carbonshift
