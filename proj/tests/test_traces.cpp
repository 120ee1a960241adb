#include <doctest.h>

#include <fstream>
#include <random>

#include "mft/traces.hpp"

using namespace mft;

namespace {

OwdSeries series_from(const std::vector<std::pair<std::int64_t, std::int64_t>>& v) {
  OwdSeries s;
  for (auto [ts, owd] : v) s.samples.push_back({ts, owd});
  return s;
}

// Constant-plus-step series sampled every 100 ms, owd in us.
OwdSeries step_series(std::int64_t base_us, std::int64_t step_us,
                      std::int64_t step_at_s, std::int64_t total_s) {
  OwdSeries s;
  for (std::int64_t t = 0; t < total_s * kUsPerSec; t += 100'000) {
    s.samples.push_back({t, t < step_at_s * kUsPerSec ? base_us : base_us + step_us});
  }
  return s;
}

}  // namespace

TEST_SUITE("traces") {

TEST_CASE("min owd bins take the per-second minimum") {
  const auto bins = min_owd_bins(series_from(
      {{100'000, 10'000}, {400'000, 12'000}, {900'000, 9'000}}));
  REQUIRE(bins.size() == 1);
  CHECK(*bins[0] == 9'000);
}

TEST_CASE("silent seconds become gap bins") {
  const auto bins = min_owd_bins(series_from(
      {{0, 10'000}, {500'000, 11'000}, {2'100'000, 12'000}}));
  REQUIRE(bins.size() == 3);
  CHECK(*bins[0] == 10'000);
  CHECK_FALSE(bins[1].has_value());
  CHECK(*bins[2] == 12'000);
}

TEST_CASE("150 seconds of 100ms probes make 150 bins") {
  OwdSeries s;
  for (std::int64_t t = 0; t < 150 * kUsPerSec; t += 100'000) {
    s.samples.push_back({t, 20'000});
  }
  CHECK(min_owd_bins(s).size() == 150);
}

TEST_CASE("empty series is an error") {
  CHECK_THROWS_AS(min_owd_bins(OwdSeries{}), AnalysisError);
}

TEST_CASE("constant series has no change points") {
  const auto report = detect_changes(min_owd_bins(step_series(20'000, 0, 0, 60)));
  CHECK(report.change_bins.empty());
  REQUIRE(report.persistent_bin_lengths.size() == 1);
  CHECK(report.persistent_bin_lengths[0] == 60);
}

TEST_CASE("a 5ms step is one change at the step bin") {
  const auto report =
      detect_changes(min_owd_bins(step_series(20'000, 5'000, 30, 60)));
  REQUIRE(report.change_bins.size() == 1);
  CHECK(report.change_bins[0] >= 28);
  CHECK(report.change_bins[0] <= 32);
}

TEST_CASE("a 1ms step stays below the significance rule") {
  const auto report =
      detect_changes(min_owd_bins(step_series(20'000, 1'000, 30, 60)));
  CHECK(report.change_bins.empty());
}

TEST_CASE("detection is invariant to a constant offset") {
  std::mt19937_64 rng(20240820);
  std::vector<std::optional<std::int64_t>> bins;
  std::int64_t level = 20'000;
  for (int i = 0; i < 90; ++i) {
    if (i % 30 == 29) level += (rng() % 2 ? 4'000 : -4'000);
    bins.push_back(level + static_cast<std::int64_t>(rng() % 400));
  }
  std::vector<std::optional<std::int64_t>> shifted;
  for (auto b : bins) shifted.push_back(*b + 123'000);

  const auto a = detect_changes(bins);
  const auto b = detect_changes(shifted);
  CHECK(a.change_bins == b.change_bins);
  CHECK(a.persistent_bin_lengths == b.persistent_bin_lengths);
}

TEST_CASE("runs from >=5s stable segments stay >=5 bins long") {
  std::mt19937_64 rng(20240821);
  std::vector<std::optional<std::int64_t>> bins;
  std::int64_t level = 15'000;
  int remain = 0;
  for (int i = 0; i < 120; ++i) {
    if (remain == 0) {
      remain = 5 + static_cast<int>(rng() % 20);
      level += (rng() % 2 ? 1 : -1) * (3'000 + static_cast<std::int64_t>(rng() % 5'000));
    }
    --remain;
    bins.push_back(level);
  }
  const auto report = detect_changes(bins);
  for (auto len : report.persistent_bin_lengths) CHECK(len >= 5);
  for (auto len : report.persistent_bin_lengths) CHECK(len >= 1);
}

TEST_CASE("gap bins terminate runs") {
  std::vector<std::optional<std::int64_t>> bins;
  for (int i = 0; i < 10; ++i) bins.push_back(20'000);
  bins.push_back(std::nullopt);
  for (int i = 0; i < 10; ++i) bins.push_back(20'000);
  const auto report = detect_changes(bins);
  CHECK(report.change_bins.empty());
  REQUIRE(report.persistent_bin_lengths.size() == 2);
  CHECK(report.persistent_bin_lengths[0] == 10);
  CHECK(report.persistent_bin_lengths[1] == 10);
}

TEST_CASE("synth trace spacing matches the rate") {
  SynthSpec spec;
  spec.cycle_ms = 1000;
  spec.cycles.push_back({6.0, 10'000});
  const auto trace = synth_trace(spec);
  REQUIRE(trace.cycles.size() == 1);
  // 6 Mbps, 1400-byte MTU: 6 opportunities per 11'200 us
  int in_window = 0;
  for (auto op : trace.cycles[0].ops_us) {
    if (op <= 11'200) ++in_window;
  }
  CHECK(in_window == 6);
  // total count: floor(rate * duration / (mtu * 8)) +- 1
  const double expected = 6e6 * 1.0 / (1400 * 8);
  CHECK(std::abs(static_cast<double>(trace.cycles[0].ops_us.size()) - expected) <= 1.0);
}

TEST_CASE("outage cycles carry no opportunities") {
  SynthSpec spec;
  spec.cycle_ms = 1000;
  spec.cycles.push_back({6.0, 10'000});
  spec.cycles.push_back({0.0, 10'000});
  const auto trace = synth_trace(spec);
  CHECK_FALSE(trace.cycles[0].ops_us.empty());
  CHECK(trace.cycles[1].ops_us.empty());
}

TEST_CASE("anticorrelated outage pair is complementary") {
  SynthSpec a, b;
  a.cycle_ms = b.cycle_ms = 1000;
  for (int k = 0; k < 6; ++k) {
    a.cycles.push_back({k % 2 == 1 ? 0.0 : 4.0, 15'000});
    b.cycles.push_back({k % 2 == 0 ? 0.0 : 4.0, 15'000});
  }
  const auto ta = synth_trace(a);
  const auto tb = synth_trace(b);
  for (int k = 0; k < 6; ++k) {
    CHECK(ta.cycles[k].ops_us.empty() != tb.cycles[k].ops_us.empty());
  }
}

TEST_CASE("negative rate is a bad spec") {
  SynthSpec spec;
  spec.cycles.push_back({-1.0, 0});
  CHECK_THROWS_AS(synth_trace(spec), AnalysisError);
}

TEST_CASE("owd series files roundtrip and validate") {
  OwdSeries s = series_from({{0, 10'000}, {100'000, 11'000}});
  save_owd_series(s, "owd_roundtrip.txt");
  const auto loaded = load_owd_series("owd_roundtrip.txt");
  REQUIRE(loaded.samples.size() == 2);
  CHECK(loaded.samples[1].owd_us == 11'000);

  {
    std::ofstream bad("owd_bad.txt");
    bad << "100 5\n100 6\n";
  }
  CHECK_THROWS_AS(load_owd_series("owd_bad.txt"), AnalysisError);
}

TEST_CASE("synth count property over random specs") {
  std::mt19937_64 rng(20240822);
  for (int round = 0; round < 50; ++round) {
    SynthSpec spec;
    spec.cycle_ms = 500 + static_cast<std::int64_t>(rng() % 2000);
    const double rate = 0.5 + static_cast<double>(rng() % 200) / 10.0;
    spec.cycles.push_back({rate, 10'000});
    const auto trace = synth_trace(spec);
    const double expected =
        rate * 1e6 * (static_cast<double>(spec.cycle_ms) / 1000.0) / (1400 * 8);
    CHECK(std::abs(static_cast<double>(trace.cycles[0].ops_us.size()) - expected) <=
          1.0);
  }
}

}  // TEST_SUITE
