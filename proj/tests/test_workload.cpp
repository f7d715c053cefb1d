#include <doctest.h>

#include <filesystem>
#include <stdexcept>

#include "carbonshift/io.hpp"
#include "carbonshift/workload.hpp"

using namespace carbonshift;

TEST_CASE("standard job lengths cover interactive to one week") {
  const auto& lengths = standard_job_lengths();
  REQUIRE(lengths.size() == 8);
  CHECK(lengths.front() == doctest::Approx(0.01));
  CHECK(lengths.back() == doctest::Approx(168.0));
  for (std::size_t i = 1; i < lengths.size(); ++i) CHECK(lengths[i - 1] < lengths[i]);
}

TEST_CASE("slack converts to hours by kind") {
  CHECK(Slack::fixed(24.0).hours(6.0) == 24.0);
  CHECK(Slack::multiplier(2.0).hours(6.0) == 12.0);
  CHECK(Slack::multiplier(0.0).hours(6.0) == 0.0);
}

TEST_CASE("validate_job enforces the invariants") {
  Job job;
  job.length_hours = 6.0;
  job.slack = Slack::fixed(3.0);
  CHECK_NOTHROW(validate_job(job));

  job.length_hours = 0.0;
  CHECK_THROWS_AS(validate_job(job), std::invalid_argument);

  job.length_hours = 6.0;
  job.slack = Slack::fixed(-1.0);
  CHECK_THROWS_AS(validate_job(job), std::invalid_argument);

  // Interactive work never waits.
  job.length_hours = 0.01;
  job.slack = Slack::fixed(2.0);
  CHECK_THROWS_AS(validate_job(job), std::invalid_argument);
  job.slack = Slack::fixed(0.0);
  CHECK_NOTHROW(validate_job(job));
}

TEST_CASE("job_slots splits length into whole slots and a fraction") {
  CHECK(job_slots(2.0).full_slots == 2);
  CHECK(job_slots(2.0).frac == 0.0);
  CHECK(job_slots(1.5).full_slots == 1);
  CHECK(job_slots(1.5).frac == doctest::Approx(0.5));
  CHECK(job_slots(0.01).full_slots == 0);
  CHECK(job_slots(0.01).frac == doctest::Approx(0.01));
}

TEST_CASE("mix presets are valid and sum to one") {
  for (auto preset : {MixPreset::equal, MixPreset::split_80_20, MixPreset::google, MixPreset::azure}) {
    const WorkloadMix mix = mix_preset(preset);
    CHECK_NOTHROW(validate_mix(mix));
    CHECK(mix.weights.size() == 8);
  }
  CHECK(mix_preset(MixPreset::equal).weights.at(24.0) == doctest::Approx(0.125));
  CHECK(mix_preset(MixPreset::google).weights.at(168.0) == doctest::Approx(0.9));
  CHECK(mix_preset(MixPreset::split_80_20).weights.at(1.0) == doctest::Approx(0.16));
  CHECK(mix_preset(MixPreset::split_80_20).weights.at(48.0) ==
        doctest::Approx(0.2 / 3.0));
}

TEST_CASE("parse_mix_preset maps names") {
  CHECK(parse_mix_preset("equal") == MixPreset::equal);
  CHECK(parse_mix_preset("google") == MixPreset::google);
  CHECK_THROWS_AS(parse_mix_preset("unknown"), std::invalid_argument);
}

TEST_CASE("validate_mix rejects bad weights") {
  WorkloadMix mix;
  mix.weights[1.0] = 0.5;
  CHECK_THROWS_AS(validate_mix(mix), std::invalid_argument);
  mix.weights[2.0] = 0.5;
  CHECK_NOTHROW(validate_mix(mix));
  mix.weights[2.0] = -0.1;
  mix.weights[3.0] = 0.6;
  CHECK_THROWS_AS(validate_mix(mix), std::invalid_argument);
}

TEST_CASE("load_mix_file reads numeric string keys") {
  const auto dir = std::filesystem::temp_directory_path() / "carbonshift_workload_test";
  const auto path = dir / "mix.json";
  write_file_atomic(path, R"({"1": 0.25, "24": 0.75})");
  const WorkloadMix mix = load_mix_file(path);
  CHECK(mix.weights.at(1.0) == doctest::Approx(0.25));
  CHECK(mix.weights.at(24.0) == doctest::Approx(0.75));

  write_file_atomic(path, R"({"1": 0.25, "24": 0.5})");
  CHECK_THROWS_AS(load_mix_file(path), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("expected_savings weights per-length values") {
  WorkloadMix mix;
  mix.weights[1.0] = 0.25;
  mix.weights[24.0] = 0.75;
  std::map<double, double> per_length{{1.0, 10.0}, {24.0, 20.0}};
  CHECK(expected_savings(per_length, mix) == doctest::Approx(17.5));

  // Zero-weight lengths may be absent; positive-weight lengths may not.
  mix.weights[48.0] = 0.0;
  CHECK(expected_savings(per_length, mix) == doctest::Approx(17.5));
  per_length.erase(24.0);
  CHECK_THROWS_AS(expected_savings(per_length, mix), std::invalid_argument);
}

TEST_CASE("origin weights must sum to one") {
  OriginWeights w;
  w.weights["A"] = 0.6;
  w.weights["B"] = 0.4;
  CHECK_NOTHROW(validate_origin_weights(w));
  w.weights["B"] = 0.3;
  CHECK_THROWS_AS(validate_origin_weights(w), std::invalid_argument);
}
