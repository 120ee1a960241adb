#pragma once
#include <cstdint>
#include <deque>
#include <vector>

#include "mft/defaults.hpp"
#include "mft/subflow.hpp"

namespace mft {

// An encoded frame split into MTU-sized payload slices.
struct FrameJob {
  std::uint32_t frame_no = 0;
  std::int64_t capture_ts_us = 0;
  std::int64_t deadline_us = 0;  // capture + delta
  std::int64_t inter_frame_delay_us = 0;
  std::vector<std::vector<std::uint8_t>> fragments;

  std::int64_t total_bytes() const {
    std::int64_t n = 0;
    for (const auto& f : fragments) n += static_cast<std::int64_t>(f.size());
    return n;
  }
};

// Everything the scheduler needs to know about one subflow at one instant.
struct SubflowSnapshot {
  std::uint8_t subflow_id = 0;
  std::int64_t owd_us = 0;
  std::int64_t ewma_iat_us = 0;
  std::int64_t in_flight = 0;
  std::int64_t cwnd = 0;

  std::int64_t capacity() const { return std::max<std::int64_t>(0, cwnd - in_flight); }
};

// Per-subflow fragment counts plus the predicted makespan.
struct Allocation {
  std::vector<std::int64_t> per_subflow;  // aligned with the snapshot vector
  std::int64_t makespan_us = 0;
  std::int64_t placed = 0;
  std::int64_t unplaced = 0;
};

// Bytes the encoder may spend on the next frame: payload-MTU times the summed
// per-subflow headroom, each term discounted to 0.8 of the window and clamped
// at zero before summing.
std::int64_t target_size_bytes(const std::vector<SubflowSnapshot>& subflows,
                               int mtu_payload_bytes);

// Probe copies to duplicate onto a subflow when a new frame arrives: a pair,
// truncated to the frame's fragments and to the cwnd+2 allowance, and only
// when the subflow has been silent for longer than tau.
std::int64_t probe_copy_count(std::int64_t now_us, std::int64_t last_send_ts_us,
                              std::int64_t tau_us, std::int64_t cwnd,
                              std::int64_t in_flight,
                              std::int64_t fragment_count);

// Distributes `fragment_count` identical MTU fragments to minimize the
// maximum estimated arrival time y_f = owd_f + (in_flight_f + x_f) * iat_f,
// subject to x_f <= cwnd_f - in_flight_f. Idle subflows (x=0 and no packets
// in flight) do not contribute to the makespan. List scheduling: each
// fragment goes to the subflow with the smallest post-assignment y; ties
// break to the lower subflow id. Fragments that fit nowhere are reported as
// unplaced, never an error.
Allocation schedule_frame(const std::vector<SubflowSnapshot>& subflows,
                          std::int64_t fragment_count);

// Packets awaiting capacity, in ascending frame-deadline order, FIFO within a
// frame. Expired frames are purged in bulk on every dequeue attempt.
class OutstandingQueue {
 public:
  struct QueuedFragment {
    std::uint32_t frame_no;
    std::uint16_t frag_no;
    std::uint16_t frag_count;
    std::int64_t capture_ts_us;
    std::int64_t deadline_us;
    std::int64_t inter_frame_delay_us;
    std::vector<std::uint8_t> payload;
  };

  void push(QueuedFragment frag);

  // Drops whole frames whose deadline is <= now; returns the dropped
  // fragments (for accounting).
  std::vector<QueuedFragment> purge_expired(std::int64_t now_us);

  // Purges, then pops up to `budget` fragments in deadline order.
  std::vector<QueuedFragment> pop_up_to(std::int64_t budget, std::int64_t now_us);

  std::size_t size() const { return queue_.size(); }
  bool empty() const { return queue_.empty(); }

 private:
  std::deque<QueuedFragment> queue_;
};

}  // namespace mft
