#pragma once
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <unordered_map>

#include "mft/defaults.hpp"
#include "mft/wire.hpp"

namespace mft {

// Receiver-side inter-arrival sample. Negative values (encoder pause longer
// than the observed gap) clamp to zero so the window stays finite.
struct IatSample {
  std::int64_t iat_us = 0;
  bool first_on_subflow = false;
};

IatSample receiver_iat(std::int64_t recv_ts_us,
                       std::optional<std::int64_t> prev_recv_ts_us,
                       std::int64_t inter_frame_delay_us);

struct SubflowConfig {
  std::int64_t delta_us = kDefaultDeltaUs;
  double ewma_alpha = kDefaultEwmaAlpha;
  std::int64_t seed_iat_us = kSeedIatUs;
  std::int64_t seed_rtt_us = kSeedRttUs;
  std::int64_t rtt_window_us = kRttWindowUs;
};

// Per-path estimator: smoothed inter-arrival time, min-RTT window over the
// last second, in-flight accounting and the derived congestion window.
//
// In-flight is strictly |sent| - |distinct acked|: a packet stays counted
// until its ACK arrives, so a path that stops acknowledging saturates its
// window and stops attracting traffic until deliveries resume.
class SubflowEstimator {
 public:
  SubflowEstimator(std::uint8_t id, SubflowConfig cfg) : id_(id), cfg_(cfg) {}

  std::uint8_t id() const { return id_; }
  const SubflowConfig& config() const { return cfg_; }

  std::uint32_t next_seq() { return next_seq_++; }

  // Registers a transmission. deadline_us is the packet's frame deadline; an
  // ACK arriving after it updates accounting but is not used as an RTT sample.
  void note_sent(std::uint32_t seq_no, std::int64_t now_us, std::int64_t deadline_us);

  void on_ack(const AckPacket& ack, std::int64_t now_us);

  // Congestion window in whole packets. Before any samples this is the
  // bootstrap value derived from the seeds; once RTT samples have been seen,
  // an empty (fully aged-out) window yields zero: a path silent for more than
  // the window span is treated as unusable until probes revive it.
  std::int64_t cwnd_packets(std::int64_t now_us);

  // Propagation-delay proxy: half of the minimum RTT in the last second.
  // Empty before any ACK (and after the window ages out).
  std::optional<std::int64_t> owd_estimate_us(std::int64_t now_us);

  // Last owd estimate that was available, for reporting on stale paths.
  std::int64_t owd_us_or_seed() const;

  std::int64_t ewma_iat_us() const;
  bool has_iat_sample() const { return has_iat_; }
  std::int64_t in_flight() const { return static_cast<std::int64_t>(outstanding_.size()); }
  std::int64_t last_send_ts_us() const { return last_send_ts_us_; }
  std::int64_t probe_interval_us() const;  // tau = min(1s, 2*ewma_iat)

 private:
  struct SentInfo {
    std::int64_t send_ts_us;
    std::int64_t deadline_us;
  };

  void push_rtt(std::int64_t rtt_us, std::int64_t now_us);
  void prune(std::int64_t now_us);

  std::uint8_t id_;
  SubflowConfig cfg_;
  std::uint32_t next_seq_ = 0;

  double ewma_iat_us_ = 0.0;
  bool has_iat_ = false;

  // Sliding-window minimum: entries ordered by time and by value, front is
  // the current minimum.
  std::deque<std::pair<std::int64_t, std::int64_t>> rtt_window_;  // (ts, rtt)
  bool had_rtt_sample_ = false;
  std::int64_t last_owd_us_ = 0;

  std::unordered_map<std::uint32_t, SentInfo> outstanding_;
  std::unordered_map<std::uint32_t, SentInfo> acked_;  // kept briefly for duplicate ACKs
  std::int64_t last_send_ts_us_ = std::numeric_limits<std::int64_t>::min() / 2;
};

}  // namespace mft
