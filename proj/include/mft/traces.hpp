#pragma once
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mft/emulib.hpp"

namespace mft {

struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One-way-delay probe log for one direction of one link.
struct OwdSeries {
  struct Sample {
    std::int64_t ts_us;
    std::int64_t owd_us;
  };
  std::vector<Sample> samples;  // timestamps strictly increasing
};

OwdSeries load_owd_series(const std::string& path);
void save_owd_series(const OwdSeries& series, const std::string& path);

// Per-second minimum OWD, bins aligned to the first sample; empty bins are
// gaps (nullopt).
std::vector<std::optional<std::int64_t>> min_owd_bins(const OwdSeries& series);

struct ChangePointReport {
  std::vector<std::size_t> change_bins;          // bin where a significant run starts
  std::vector<std::size_t> persistent_bin_lengths;  // run lengths, partitioning the bins
};

// Segments the bin series into runs of stable mean (exact squared-error
// segmentation with a per-changepoint penalty), then merges adjacent runs
// whose means differ by less than `significance_us` (2 ms by default).
// Gap bins terminate runs.
ChangePointReport detect_changes(
    const std::vector<std::optional<std::int64_t>>& bins,
    std::int64_t significance_us = 2000);

// ---- synthetic traces ----

struct SynthCycle {
  double rate_mbps = 0.0;  // 0 = outage
  std::int64_t pd_us = 0;
};

struct SynthSpec {
  std::vector<SynthCycle> cycles;
  std::int64_t cycle_ms = 5000;
  int mtu_bytes = kDefaultMtuBytes;
};

// Delivery opportunities spaced MTU*8/rate within non-outage cycles,
// millisecond-aligned, deterministic. Throws AnalysisError for negative
// rates or delays.
CellNemTrace synth_trace(const SynthSpec& spec);

// Constant-rate flat trace for cellsim-style replay.
LinkTrace synth_link_trace(double rate_mbps, std::int64_t duration_ms,
                           int mtu_bytes = kDefaultMtuBytes);

}  // namespace mft
