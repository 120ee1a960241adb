#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "mft/defaults.hpp"
#include "mft/subflow.hpp"
#include "mft/wire.hpp"

namespace mft {

struct ReceiverConfig {
  std::int64_t delta_us = kDefaultDeltaUs;
  std::int64_t omega_us = kDefaultOmegaUs;
  std::int64_t frame_interval_us = kUsPerSec / kDefaultFps;
  // A reverse path counts as live while its forward direction delivered a
  // packet this recently; ACK copies stop flowing onto interfaces that look
  // dead so their queues do not bury fresh feedback at revival.
  std::int64_t liveness_window_us = 200'000;
};

// Reassembly buffer for one frame.
struct FrameBuffer {
  std::uint32_t frame_no = 0;
  std::int64_t capture_ts_us = 0;
  std::int64_t first_packet_recv_ts_us = 0;
  std::vector<std::optional<std::vector<std::uint8_t>>> slots;
  int received_count = 0;

  bool complete() const { return received_count == static_cast<int>(slots.size()); }
  std::int64_t delivered_bytes() const;
};

// A frame handed to the decoder, in strictly increasing frame order.
struct ReleasedFrame {
  std::uint32_t frame_no = 0;
  std::int64_t capture_ts_us = 0;
  std::int64_t release_ts_us = 0;
  std::int64_t delivered_bytes = 0;
  int fragments_present = 0;
  int fragment_count = 0;
  bool complete = false;
};

// Receiver-side reordering state: next-expected-frame index, per-frame
// buffers, and the grace rule that holds an incomplete frame until the next
// frame's deadline minus the decode allowance.
class Reassembler {
 public:
  explicit Reassembler(ReceiverConfig cfg) : cfg_(cfg) {}

  struct DataResult {
    AckPacket ack;                        // duplicated on every reverse path
    std::vector<ReleasedFrame> released;  // possibly empty
    bool stale = false;                   // packet for an already-advanced frame
  };

  DataResult on_data(const DataPacket& pkt, std::int64_t recv_ts_us);

  // Releases every frame the ordering and grace rules allow at `now_us`.
  // Also invoked on timer ticks.
  std::vector<ReleasedFrame> forward_ready(std::int64_t now_us);

  std::uint32_t next_expected() const { return next_expected_; }

  // Subflows whose forward direction is live per the liveness window; falls
  // back to every known subflow when all have gone quiet.
  std::vector<std::uint8_t> live_subflows(std::int64_t now_us) const;

  // Frames skipped without release (no packet ever arrived before the grace
  // instant), for drop accounting.
  const std::vector<std::uint32_t>& skipped_frames() const { return skipped_; }

 private:
  struct RxSubflow {
    std::optional<std::int64_t> prev_recv_ts_us;
    std::optional<std::uint32_t> prev_frame_no;
  };

  std::int64_t deadline_us(std::uint32_t frame_no) const;
  ReleasedFrame release(FrameBuffer& buf, std::int64_t now_us);

  ReceiverConfig cfg_;
  std::uint32_t next_expected_ = 0;
  std::map<std::uint32_t, FrameBuffer> buffers_;
  std::map<std::uint8_t, RxSubflow> subflows_;
  std::vector<std::uint32_t> skipped_;

  // Most recent frame whose capture time is known; capture instants are
  // periodic, so deadlines of unseen frames extrapolate from here.
  std::optional<std::uint32_t> ref_frame_no_;
  std::int64_t ref_capture_ts_us_ = 0;
};

}  // namespace mft
