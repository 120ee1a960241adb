#include "mft/codec.hpp"

#include <algorithm>
#include <cmath>

namespace mft {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

void fill_frame_payload(std::uint64_t seed, std::uint32_t frame_no,
                        std::vector<std::vector<std::uint8_t>>& fragments) {
  std::uint64_t state = seed ^ (0xA076'1D64'78BD'642Full * (frame_no + 1));
  std::uint64_t word = 0;
  int have = 0;
  for (auto& frag : fragments) {
    for (auto& byte : frag) {
      if (have == 0) {
        word = splitmix64(state);
        have = 8;
      }
      byte = static_cast<std::uint8_t>(word);
      word >>= 8;
      --have;
    }
  }
}

FrameJob EncoderShim::next_frame(std::int64_t now_us) {
  FrameJob job;
  job.frame_no = next_frame_no_++;
  job.capture_ts_us = now_us;
  job.deadline_us = now_us + cfg_.delta_us;
  job.inter_frame_delay_us =
      std::max<std::int64_t>(0, cfg_.frame_interval_us() - last_emit_span_us_);

  const std::int64_t size =
      std::clamp(target_size_bytes_, cfg_.min_frame_bytes, cfg_.max_frame_bytes);
  const std::int64_t mtu = cfg_.mtu_payload_bytes;
  const std::int64_t frags = (size + mtu - 1) / mtu;
  job.fragments.resize(frags);
  for (std::int64_t i = 0; i < frags; ++i) {
    const std::int64_t this_size = i + 1 < frags ? mtu : size - mtu * (frags - 1);
    job.fragments[i].resize(this_size);
  }
  fill_frame_payload(cfg_.rng_seed, job.frame_no, job.fragments);

  maybe_enter_recovery();
  return job;
}

void EncoderShim::note_frame_emitted(std::uint32_t, std::int64_t emit_span_us) {
  last_emit_span_us_ = std::max<std::int64_t>(0, emit_span_us);
}

void EncoderShim::on_feedback(const DecoderFeedback& fb) {
  frames_since_feedback_ = 0;
  if (fb.frame_no < feedback_floor_ || feedback_seen_.count(fb.frame_no)) {
    return;  // duplicate copy from another reverse path
  }
  feedback_seen_.insert(fb.frame_no);
  while (feedback_seen_.count(feedback_floor_)) {
    feedback_seen_.erase(feedback_floor_);
    ++feedback_floor_;
  }

  bool missing_older = false;
  if (fb.frame_no >= 2 && feedback_floor_ < fb.frame_no - 1) {
    // Feedback for this frame overtook a frame more than the reorder slack
    // behind it: that feedback was lost or its frame never reached the
    // decoder. Pure delay cannot trigger this; each path delivers in order.
    missing_older = true;
  }

  if (fb.complete && !missing_older) {
    if (state_id_ == 0xFFFFFFFFu || fb.frame_no > state_id_) state_id_ = fb.frame_no;
    in_recovery_ = false;
  } else {
    if (fb.complete && (state_id_ == 0xFFFFFFFFu || fb.frame_no > state_id_)) {
      state_id_ = fb.frame_no;
    }
    if (!in_recovery_) ++recovery_entries_;
    in_recovery_ = true;  // encode against the last confirmed state
  }
}

void EncoderShim::maybe_enter_recovery() {
  // Feedback blackout: nothing has come back for several frame intervals
  // while emitted frames are waiting on it.
  ++frames_since_feedback_;
  if (in_recovery_) return;
  if (frames_since_feedback_ > 3 && feedback_floor_ + 3 < next_frame_no_) {
    ++recovery_entries_;
    in_recovery_ = true;
  }
}

DecoderFeedback DecoderShim::on_frame_released(std::uint32_t frame_no, bool complete) {
  ++frames_decoded_;
  if (complete) state_id_ = frame_no;
  return DecoderFeedback{frame_no, complete, state_id_};
}

double quality_proxy(std::int64_t delivered_bytes, std::int64_t encoded_bytes,
                     bool complete, std::int64_t min_frame_bytes) {
  if (delivered_bytes <= 0) return 0.0;
  const double score = std::log2(
      1.0 + static_cast<double>(delivered_bytes) / static_cast<double>(min_frame_bytes));
  if (complete) return score;
  if (encoded_bytes <= 0) return 0.0;
  const double fraction =
      static_cast<double>(delivered_bytes) / static_cast<double>(encoded_bytes);
  return score * fraction;
}

}  // namespace mft
