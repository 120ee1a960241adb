#pragma once
#include <cstdint>
#include <set>

#include "mft/defaults.hpp"
#include "mft/sender.hpp"

namespace mft {

struct CodecConfig {
  int fps = kDefaultFps;
  std::int64_t min_frame_bytes = kDefaultMinFrameBytes;
  std::int64_t max_frame_bytes = kDefaultMaxFrameBytes;
  int mtu_payload_bytes = kDefaultMtuBytes - 29;
  std::int64_t delta_us = kDefaultDeltaUs;
  std::uint64_t rng_seed = 1;

  std::int64_t frame_interval_us() const { return kUsPerSec / fps; }
};

// Decoder feedback as seen by the codec shim (already off the wire).
struct DecoderFeedback {
  std::uint32_t frame_no = 0;
  bool complete = false;
  std::uint32_t decode_state_id = 0xFFFFFFFFu;
};

// Synthetic stand-in for a per-frame-adaptive video encoder: emits frames at
// a fixed cadence whose byte size tracks the commanded target, and mirrors
// the decoder-state coupling (complete feedback confirms state, missing or
// partial feedback forces a rollback to the last confirmed state).
class EncoderShim {
 public:
  explicit EncoderShim(CodecConfig cfg) : cfg_(cfg) {}

  // now_us must be a frame-capture instant (multiple of frame_interval_us).
  FrameJob next_frame(std::int64_t now_us);

  void set_target_size(std::int64_t bytes) { target_size_bytes_ = bytes; }
  std::int64_t target_size() const { return target_size_bytes_; }

  // Called by the transport when the previous frame's packets finished going
  // out; feeds the inter-frame-delay header field of the next frame.
  void note_frame_emitted(std::uint32_t frame_no, std::int64_t emit_span_us);

  void on_feedback(const DecoderFeedback& fb);

  bool in_recovery() const { return in_recovery_; }
  std::int64_t recovery_entries() const { return recovery_entries_; }
  std::uint32_t state_id() const { return state_id_; }
  std::uint32_t frames_emitted() const { return next_frame_no_; }

  const CodecConfig& config() const { return cfg_; }

 private:
  void maybe_enter_recovery();

  CodecConfig cfg_;
  std::int64_t target_size_bytes_ = kDefaultMinFrameBytes;
  std::uint32_t next_frame_no_ = 0;
  std::uint32_t state_id_ = 0xFFFFFFFFu;  // last decoder-confirmed state
  bool in_recovery_ = false;
  std::int64_t recovery_entries_ = 0;
  std::int64_t last_emit_span_us_ = 0;
  std::set<std::uint32_t> feedback_seen_;  // dedup across duplicated paths
  std::uint32_t feedback_floor_ = 0;       // frames below this all have feedback
  std::uint32_t frames_since_feedback_ = 0;
};

// Decoder-side mirror: consumes frames in the order the receiver releases
// them and produces the feedback records routed back to the encoder.
class DecoderShim {
 public:
  DecoderFeedback on_frame_released(std::uint32_t frame_no, bool complete);
  std::int64_t frames_decoded() const { return frames_decoded_; }

 private:
  std::uint32_t state_id_ = 0xFFFFFFFFu;
  std::int64_t frames_decoded_ = 0;
};

// Per-frame quality score standing in for a perceptual metric: logarithmic in
// delivered bytes, scaled by the delivered fraction for partial frames, zero
// for dropped frames.
double quality_proxy(std::int64_t delivered_bytes, std::int64_t encoded_bytes,
                     bool complete, std::int64_t min_frame_bytes);

// Deterministic payload bytes for (seed, frame_no); shared by tests.
void fill_frame_payload(std::uint64_t seed, std::uint32_t frame_no,
                        std::vector<std::vector<std::uint8_t>>& fragments);

}  // namespace mft
