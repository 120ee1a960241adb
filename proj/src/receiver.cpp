#include "mft/receiver.hpp"

#include <algorithm>

namespace mft {

std::int64_t FrameBuffer::delivered_bytes() const {
  std::int64_t n = 0;
  for (const auto& s : slots) {
    if (s) n += static_cast<std::int64_t>(s->size());
  }
  return n;
}

Reassembler::DataResult Reassembler::on_data(const DataPacket& pkt,
                                             std::int64_t recv_ts_us) {
  DataResult result;

  auto& sub = subflows_[pkt.subflow_id];
  // The inter-frame-delay correction applies to the packet that opens the
  // next frame on this subflow; gaps within one frame carry no encoder pause,
  // and a gap spanning more than one frame covers pauses this packet's header
  // cannot account for, so it yields no sample at all.
  IatSample iat;
  if (!sub.prev_frame_no.has_value() || *sub.prev_frame_no == pkt.frame_no) {
    iat = receiver_iat(recv_ts_us, sub.prev_recv_ts_us, 0);
  } else if (pkt.frame_no == *sub.prev_frame_no + 1) {
    iat = receiver_iat(recv_ts_us, sub.prev_recv_ts_us,
                       static_cast<std::int64_t>(pkt.inter_frame_delay_us));
  } else {
    iat = IatSample{0, true};
  }
  sub.prev_recv_ts_us = recv_ts_us;
  sub.prev_frame_no = pkt.frame_no;

  result.ack.subflow_id = pkt.subflow_id;
  result.ack.seq_no = pkt.seq_no;
  result.ack.frame_no = pkt.frame_no;
  result.ack.frag_no = pkt.frag_no;
  result.ack.iat_us = static_cast<std::uint32_t>(
      std::min<std::int64_t>(iat.iat_us, 0xFFFFFFFFll));
  result.ack.first_on_subflow = iat.first_on_subflow;
  result.ack.receiver_ts_us = static_cast<std::uint64_t>(recv_ts_us);
  result.ack.echo_capture_ts_us = pkt.capture_ts_us;

  if (!ref_frame_no_.has_value() || pkt.frame_no > *ref_frame_no_) {
    ref_frame_no_ = pkt.frame_no;
    ref_capture_ts_us_ = static_cast<std::int64_t>(pkt.capture_ts_us);
  }

  if (pkt.frame_no < next_expected_) {
    result.stale = true;  // ACKed so the sender's accounting clears, payload dropped
    return result;
  }

  auto [it, created] = buffers_.try_emplace(pkt.frame_no);
  FrameBuffer& buf = it->second;
  if (created) {
    buf.frame_no = pkt.frame_no;
    buf.capture_ts_us = static_cast<std::int64_t>(pkt.capture_ts_us);
    buf.first_packet_recv_ts_us = recv_ts_us;
    buf.slots.resize(pkt.frag_count);
  }
  if (pkt.frag_no < buf.slots.size() && !buf.slots[pkt.frag_no].has_value()) {
    buf.slots[pkt.frag_no] = pkt.payload;
    ++buf.received_count;
  }
  // else: probe duplicate of a filled slot, buffer unchanged

  result.released = forward_ready(recv_ts_us);
  return result;
}

std::int64_t Reassembler::deadline_us(std::uint32_t frame_no) const {
  auto it = buffers_.find(frame_no);
  if (it != buffers_.end()) {
    return it->second.capture_ts_us + cfg_.delta_us;
  }
  // Capture instants are periodic: extrapolate from the newest known frame.
  const std::int64_t ref_frame = ref_frame_no_.has_value()
                                     ? static_cast<std::int64_t>(*ref_frame_no_)
                                     : 0;
  const std::int64_t capture =
      ref_capture_ts_us_ +
      (static_cast<std::int64_t>(frame_no) - ref_frame) * cfg_.frame_interval_us;
  return capture + cfg_.delta_us;
}

ReleasedFrame Reassembler::release(FrameBuffer& buf, std::int64_t now_us) {
  ReleasedFrame out;
  out.frame_no = buf.frame_no;
  out.capture_ts_us = buf.capture_ts_us;
  out.release_ts_us = now_us;
  out.delivered_bytes = buf.delivered_bytes();
  out.fragments_present = buf.received_count;
  out.fragment_count = static_cast<int>(buf.slots.size());
  out.complete = buf.complete();
  return out;
}

std::vector<std::uint8_t> Reassembler::live_subflows(std::int64_t now_us) const {
  std::vector<std::uint8_t> live;
  for (const auto& [id, sub] : subflows_) {
    if (sub.prev_recv_ts_us &&
        now_us - *sub.prev_recv_ts_us <= cfg_.liveness_window_us) {
      live.push_back(id);
    }
  }
  if (live.empty()) {
    for (const auto& [id, sub] : subflows_) live.push_back(id);
  }
  return live;
}

std::vector<ReleasedFrame> Reassembler::forward_ready(std::int64_t now_us) {
  std::vector<ReleasedFrame> released;
  while (true) {
    auto it = buffers_.find(next_expected_);
    if (it != buffers_.end() && it->second.complete()) {
      released.push_back(release(it->second, now_us));
      buffers_.erase(it);
      ++next_expected_;
      continue;
    }
    if (!ref_frame_no_.has_value()) break;  // nothing ever arrived
    if (now_us < deadline_us(next_expected_ + 1) - cfg_.omega_us) break;
    // Grace period over: forward whatever arrived, or skip a frame that
    // never produced a single packet.
    if (it != buffers_.end()) {
      released.push_back(release(it->second, now_us));
      buffers_.erase(it);
    } else {
      skipped_.push_back(next_expected_);
    }
    ++next_expected_;
  }
  return released;
}

}  // namespace mft
