#include "mft/wire.hpp"

namespace mft {
namespace {

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

struct Reader {
  const std::vector<std::uint8_t>& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) {
      throw WireError(WireError::Kind::kTruncated, "datagram truncated");
    }
  }
  std::uint8_t u8() {
    need(1);
    return buf[pos++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(buf[pos] << 8 | buf[pos + 1]);
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | buf[pos + i];
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = v << 8 | buf[pos + i];
    pos += 8;
    return v;
  }
};

void expect_type(Reader& r, WireType t) {
  std::uint8_t got = r.u8();
  if (got != static_cast<std::uint8_t>(t)) {
    throw WireError(WireError::Kind::kBadType,
                    "unexpected type octet " + std::to_string(got));
  }
}

}  // namespace

WireType peek_type(const std::vector<std::uint8_t>& buf) {
  if (buf.empty()) {
    throw WireError(WireError::Kind::kTruncated, "empty datagram");
  }
  return static_cast<WireType>(buf[0]);
}

std::vector<std::uint8_t> encode_data(const DataPacket& pkt, const WireConfig& cfg) {
  const std::size_t total = DataPacket::kHeaderBytes + pkt.payload.size();
  if (total > static_cast<std::size_t>(cfg.mtu_bytes)) {
    throw WireError(WireError::Kind::kPayloadTooLarge,
                    "encoded size " + std::to_string(total) + " exceeds mtu " +
                        std::to_string(cfg.mtu_bytes));
  }
  std::vector<std::uint8_t> out;
  out.reserve(total);
  put_u8(out, static_cast<std::uint8_t>(WireType::kData));
  put_u32(out, pkt.frame_no);
  put_u16(out, pkt.frag_no);
  put_u16(out, pkt.frag_count);
  put_u8(out, pkt.subflow_id);
  put_u32(out, pkt.seq_no);
  put_u32(out, pkt.inter_frame_delay_us);
  put_u64(out, pkt.capture_ts_us);
  put_u8(out, pkt.is_probe ? 1 : 0);
  put_u16(out, static_cast<std::uint16_t>(pkt.payload.size()));
  out.insert(out.end(), pkt.payload.begin(), pkt.payload.end());
  return out;
}

DataPacket decode_data(const std::vector<std::uint8_t>& buf, const WireConfig&) {
  Reader r{buf};
  expect_type(r, WireType::kData);
  DataPacket pkt;
  pkt.frame_no = r.u32();
  pkt.frag_no = r.u16();
  pkt.frag_count = r.u16();
  pkt.subflow_id = r.u8();
  pkt.seq_no = r.u32();
  pkt.inter_frame_delay_us = r.u32();
  pkt.capture_ts_us = r.u64();
  pkt.is_probe = r.u8() != 0;
  const std::uint16_t len = r.u16();
  r.need(len);
  pkt.payload.assign(buf.begin() + r.pos, buf.begin() + r.pos + len);
  return pkt;
}

std::vector<std::uint8_t> encode_ack(const AckPacket& ack, const WireConfig&) {
  std::vector<std::uint8_t> out;
  out.reserve(AckPacket::kHeaderBytes);
  put_u8(out, static_cast<std::uint8_t>(WireType::kAck));
  put_u8(out, ack.subflow_id);
  put_u32(out, ack.seq_no);
  put_u32(out, ack.frame_no);
  put_u16(out, ack.frag_no);
  put_u32(out, ack.iat_us);
  put_u8(out, ack.first_on_subflow ? 1 : 0);
  put_u64(out, ack.receiver_ts_us);
  put_u64(out, ack.echo_capture_ts_us);
  return out;
}

AckPacket decode_ack(const std::vector<std::uint8_t>& buf, const WireConfig&) {
  Reader r{buf};
  expect_type(r, WireType::kAck);
  AckPacket ack;
  ack.subflow_id = r.u8();
  ack.seq_no = r.u32();
  ack.frame_no = r.u32();
  ack.frag_no = r.u16();
  ack.iat_us = r.u32();
  ack.first_on_subflow = r.u8() != 0;
  ack.receiver_ts_us = r.u64();
  ack.echo_capture_ts_us = r.u64();
  return ack;
}

std::vector<std::uint8_t> encode_feedback(const FeedbackPacket& fb, const WireConfig&) {
  std::vector<std::uint8_t> out;
  out.reserve(FeedbackPacket::kHeaderBytes);
  put_u8(out, static_cast<std::uint8_t>(WireType::kFeedback));
  put_u32(out, fb.frame_no);
  put_u8(out, fb.complete ? 1 : 0);
  put_u32(out, fb.decode_state_id);
  put_u32(out, fb.target_size_bytes);
  return out;
}

FeedbackPacket decode_feedback(const std::vector<std::uint8_t>& buf, const WireConfig&) {
  Reader r{buf};
  expect_type(r, WireType::kFeedback);
  FeedbackPacket fb;
  fb.frame_no = r.u32();
  fb.complete = r.u8() != 0;
  fb.decode_state_id = r.u32();
  fb.target_size_bytes = r.u32();
  return fb;
}

}  // namespace mft
