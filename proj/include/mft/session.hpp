#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mft/defaults.hpp"
#include "mft/emulib.hpp"

namespace mft {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One direction of one emulated link, as configured.
struct DirectionSpec {
  enum class Kind { kCellNem, kFlat };
  Kind kind = Kind::kFlat;
  CellNemTrace cellnem;
  LinkTrace flat;
  std::int64_t pd_us = 0;  // flat traces only
  std::string source;      // file path or synth description, for logs/compare
};

struct LinkSetup {
  DirectionSpec forward;
  DirectionSpec reverse;
};

struct SessionConfig {
  std::string name = "session";
  std::int64_t delta_us = kDefaultDeltaUs;
  int fps = kDefaultFps;
  int mtu_bytes = kDefaultMtuBytes;
  double ewma_alpha = kDefaultEwmaAlpha;
  std::int64_t omega_us = kDefaultOmegaUs;
  std::int64_t min_frame_bytes = kDefaultMinFrameBytes;
  std::int64_t max_frame_bytes = kDefaultMaxFrameBytes;
  std::int64_t duration_s = 10;
  std::uint64_t seed = 1;

  enum class Mode { kMultipath, kSinglePath };
  Mode mode = Mode::kMultipath;
  int single_path_link = 0;

  std::vector<LinkSetup> links;
  std::vector<int> subflow_links;  // link index per subflow; empty = one per link

  enum class Clock { kVirtual, kRealtime };
  Clock clock = Clock::kVirtual;

  std::int64_t frame_interval_us() const { return kUsPerSec / fps; }
  void validate() const;  // throws ConfigError
};

// Estimator state sampled at frame capture, for diagnostics and tests.
struct SubflowDiag {
  std::int64_t cwnd = 0;
  std::int64_t in_flight = 0;
  std::int64_t ewma_iat_us = 0;
  std::int64_t owd_us = 0;
};

struct FrameRecord {
  std::uint32_t frame_no = 0;
  std::int64_t capture_us = 0;
  std::int64_t encoded_bytes = 0;
  int fragment_count = 0;
  std::optional<std::int64_t> release_us;
  std::int64_t delivered_bytes = 0;
  bool complete = false;
  bool sender_dropped = false;  // some fragments expired in the sender queue
  std::map<int, std::int64_t> subflow_bytes;  // sent payload split
  double quality = 0.0;
  std::vector<SubflowDiag> diag;  // not serialized

  std::int64_t delay_us() const { return release_us ? *release_us - capture_us : -1; }
};

struct SessionMetrics {
  std::vector<FrameRecord> frames;
  std::int64_t cwnd_violations = 0;
  std::int64_t recovery_entries = 0;
  bool ordering_ok = true;
  std::int64_t acks_received = 0;
  std::int64_t packets_sent = 0;
  std::int64_t probes_sent = 0;
};

// Nearest-rank percentile as documented in the README: the value at 1-based
// rank floor(p*N/100)+1 (capped at N) of the ascending-sorted list.
std::int64_t percentile_nearest_rank(std::vector<std::int64_t> values, int pct);
double percentile_nearest_rank(std::vector<double> values, int pct);

struct RunSummary {
  std::string label;
  std::int64_t frames = 0;
  double complete_pct = 0.0;
  double late_pct = 0.0;  // delivered frames with delay > delta
  double mean_delay_us = 0.0;
  std::int64_t p5_delay_us = 0;
  std::int64_t p25_delay_us = 0;
  std::int64_t p75_delay_us = 0;
  std::int64_t p95_delay_us = 0;
  double mean_quality = 0.0;
};

SessionMetrics run_session(const SessionConfig& config);
RunSummary summarize(const std::string& label, const SessionMetrics& metrics,
                     const SessionConfig& config);

// Runs every config (>= 2, sharing the same link setups) and returns aligned
// summary rows.
std::vector<RunSummary> compare_sessions(const std::vector<SessionConfig>& configs);

// CSV emitters; identical inputs produce identical bytes.
std::string frames_csv(const SessionMetrics& metrics);
std::string summary_csv(const SessionMetrics& metrics, const SessionConfig& config);
std::string compare_csv(const std::vector<RunSummary>& rows);

}  // namespace mft
