#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "carbonshift/io.hpp"
#include "carbonshift/trace.hpp"

using namespace carbonshift;

namespace {

std::string csv_header() { return "timestamp,region_id,carbon_intensity\n"; }

std::string row(EpochHour hour, const std::string& region, double value) {
  return format_utc_hour(hour) + "," + region + "," + format_double(value) + "\n";
}

CarbonTrace make_trace(std::vector<double> values, const std::string& id = "R") {
  CarbonTrace t;
  t.region_id = id;
  t.start_hour = 0;
  t.values = std::move(values);
  return t;
}

}  // namespace

TEST_CASE("load_trace reads the canonical format") {
  std::istringstream in(csv_header() + row(0, "DE", 100) + row(1, "DE", 110) + row(2, "DE", 95));
  const CarbonTrace t = load_trace(in, "DE");
  CHECK(t.region_id == "DE");
  CHECK(t.start_hour == 0);
  REQUIRE(t.size() == 3);
  CHECK(t.values[1] == 110.0);
}

TEST_CASE("load_trace requires the header") {
  std::istringstream in(row(0, "DE", 100));
  CHECK_THROWS_AS(load_trace(in, "DE"), std::invalid_argument);
}

TEST_CASE("load_trace tolerates a UTF-8 BOM") {
  std::istringstream in("\xEF\xBB\xBF" + csv_header() + row(0, "DE", 100));
  CHECK(load_trace(in, "DE").size() == 1);
}

TEST_CASE("load_trace keeps only the requested region") {
  std::istringstream in(csv_header() + row(0, "DE", 100) + row(0, "FR", 50) + row(1, "DE", 120));
  const CarbonTrace t = load_trace(in, "DE");
  REQUIRE(t.size() == 2);
  CHECK(t.values[1] == 120.0);
}

TEST_CASE("load_trace interpolates short gaps linearly") {
  // Hours 1 and 2 are missing: 100 -> 130 over three steps.
  std::istringstream in(csv_header() + row(0, "DE", 100) + row(3, "DE", 130));
  const CarbonTrace t = load_trace(in, "DE");
  REQUIRE(t.size() == 4);
  CHECK(t.values[1] == doctest::Approx(110.0));
  CHECK(t.values[2] == doctest::Approx(120.0));
}

TEST_CASE("load_trace rejects gaps beyond the limit") {
  std::istringstream in(csv_header() + row(0, "DE", 100) + row(5, "DE", 130));
  try {
    load_trace(in, "DE", {3});
    FAIL("expected a gap error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("gap of 4") != std::string::npos);
  }
  std::istringstream again(csv_header() + row(0, "DE", 100) + row(5, "DE", 130));
  CHECK(load_trace(again, "DE", {4}).size() == 6);
}

TEST_CASE("load_trace rejects non-increasing timestamps and bad values") {
  std::istringstream dup(csv_header() + row(1, "DE", 100) + row(1, "DE", 101));
  CHECK_THROWS_AS(load_trace(dup, "DE"), std::invalid_argument);
  std::istringstream back(csv_header() + row(2, "DE", 100) + row(1, "DE", 101));
  CHECK_THROWS_AS(load_trace(back, "DE"), std::invalid_argument);
  std::istringstream neg(csv_header() + row(0, "DE", -1));
  CHECK_THROWS_AS(load_trace(neg, "DE"), std::invalid_argument);
  std::istringstream nan(csv_header() + "1970-01-01T00:00:00Z,DE,nope\n");
  CHECK_THROWS_AS(load_trace(nan, "DE"), std::invalid_argument);
}

TEST_CASE("load_trace rejects an empty result") {
  std::istringstream in(csv_header() + row(0, "FR", 50));
  CHECK_THROWS_AS(load_trace(in, "DE"), std::invalid_argument);
}

TEST_CASE("trace_to_csv round-trips through load_trace") {
  const CarbonTrace t = make_trace({100.0, 110.5, 95.25}, "DE");
  std::istringstream in(trace_to_csv(t));
  const CarbonTrace back = load_trace(in, "DE");
  CHECK(back.values == t.values);
  CHECK(back.start_hour == t.start_hour);
}

TEST_CASE("load_traces_dir loads every region sorted") {
  const auto dir = std::filesystem::temp_directory_path() / "carbonshift_trace_dir_test";
  std::filesystem::remove_all(dir);
  write_file_atomic(dir / "b.csv", csv_header() + row(0, "ZZ", 10) + row(1, "ZZ", 11));
  write_file_atomic(dir / "a.csv", csv_header() + row(0, "AA", 20) + row(1, "AA", 21));
  const auto traces = load_traces_dir(dir);
  REQUIRE(traces.size() == 2);
  CHECK(traces[0].region_id == "AA");
  CHECK(traces[1].region_id == "ZZ");

  // The same region must not continue in a second file.
  write_file_atomic(dir / "c.csv", csv_header() + row(2, "AA", 22));
  CHECK_THROWS_AS(load_traces_dir(dir), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("compute_stats matches hand numbers") {
  const CarbonTrace t = make_trace({2, 4, 4, 4, 5, 5, 7, 9});
  const TraceStats s = compute_stats(t);
  CHECK(s.mean == doctest::Approx(5.0));
  CHECK(s.std == doctest::Approx(2.0));
  CHECK(s.cv == doctest::Approx(0.4));
  CHECK(s.min == 2.0);
  CHECK(s.max == 9.0);

  const TraceStats w = compute_stats(t, SlotRange{0, 4});
  CHECK(w.mean == doctest::Approx(3.5));

  CHECK(compute_stats(make_trace({0, 0, 0})).cv == 0.0);
  CHECK_THROWS_AS(compute_stats(t, SlotRange{4, 20}), std::invalid_argument);
}

TEST_CASE("mean_daily_cv averages complete days only") {
  std::vector<double> values;
  for (int d = 0; d < 2; ++d)
    for (int h = 0; h < 24; ++h) values.push_back(d == 0 ? 100.0 : (h < 12 ? 50.0 : 150.0));
  values.push_back(999.0);  // dangling hour is ignored
  const CarbonTrace t = make_trace(values);
  CHECK(mean_daily_cv(t) == doctest::Approx(0.25));  // (0 + 0.5) / 2
  CHECK_THROWS_AS(mean_daily_cv(make_trace({1, 2, 3})), std::invalid_argument);
}

TEST_CASE("classify_quadrant compares against corpus averages") {
  TraceStats s;
  s.mean = 300.0;
  s.cv = 0.2;
  const QuadrantLabel q = classify_quadrant(s, 200.0, 0.3);
  CHECK(q.ci_class == Level::high);
  CHECK(q.cv_class == Level::low);

  // Ties land in low.
  const QuadrantLabel tie = classify_quadrant(s, 300.0, 0.2);
  CHECK(tie.ci_class == Level::low);
  CHECK(tie.cv_class == Level::low);

  CHECK_THROWS_AS(classify_quadrant(s, 0.0, 0.3), std::invalid_argument);
}

TEST_CASE("detect_periodicity scores a pure daily cycle") {
  std::vector<double> values;
  for (int t = 0; t < 24 * 30; ++t)
    values.push_back(100.0 + 20.0 * std::sin(2.0 * M_PI * t / 24.0));
  const auto entries = detect_periodicity(make_trace(values));
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].period_hours == 24);
  CHECK(entries[0].score == doctest::Approx(1.0).epsilon(0.01));
  CHECK(entries[1].period_hours == 168);
  CHECK(entries[1].score <= 0.2);
}

TEST_CASE("detect_periodicity scores a weekly cycle at 168") {
  std::vector<double> values;
  for (int t = 0; t < 168 * 4; ++t)
    values.push_back(100.0 + 20.0 * std::sin(2.0 * M_PI * t / 168.0));
  const auto entries = detect_periodicity(make_trace(values));
  CHECK(entries[0].period_hours == 168);
  CHECK(entries[0].score == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("detect_periodicity gives constants a zero score") {
  const auto entries = detect_periodicity(make_trace(std::vector<double>(24 * 30, 42.0)));
  for (const auto& e : entries) CHECK(e.score == 0.0);
}

TEST_CASE("detect_periodicity needs two cycles of the largest candidate") {
  CHECK_THROWS_AS(detect_periodicity(make_trace(std::vector<double>(100, 1.0))),
                  std::invalid_argument);
  CHECK_THROWS_AS(detect_periodicity(make_trace(std::vector<double>(400, 1.0)), {24, 24}),
                  std::invalid_argument);
}

TEST_CASE("classify_trend applies both thresholds one-sided") {
  CHECK(classify_trend(-30.0, 0.0) == TrendClass::improved);
  CHECK(classify_trend(30.0, 0.0) == TrendClass::worsened);
  CHECK(classify_trend(-25.0, 0.01) == TrendClass::insignificant);
  CHECK(classify_trend(-10.0, 0.02) == TrendClass::improved);
  CHECK(classify_trend(10.0, -0.02) == TrendClass::worsened);
  // A CV-only change with zero mean movement stays insignificant.
  CHECK(classify_trend(0.0, 0.5) == TrendClass::insignificant);
}

TEST_CASE("trend_delta compares two periods of one region") {
  std::vector<double> a(28 * 24, 100.0), b(28 * 24, 60.0);
  const CarbonTrace ta = make_trace(a, "DE");
  CarbonTrace tb = make_trace(b, "DE");
  const TrendDelta d = trend_delta(ta, tb);
  CHECK(d.delta_mean == doctest::Approx(-40.0));
  CHECK(d.cls == TrendClass::improved);
  CHECK(d.region_id == "DE");

  tb.region_id = "FR";
  CHECK_THROWS_AS(trend_delta(ta, tb), std::invalid_argument);
  CHECK_THROWS_AS(trend_delta(make_trace({1, 2, 3}, "DE"), tb), std::invalid_argument);
}
