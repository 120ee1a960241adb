#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mft/defaults.hpp"

// Datagram formats exchanged between sender and receiver. Fixed-width
// big-endian fields in declared order, one leading type octet per datagram.
// The layouts are pinned bit-exactly by golden tests; do not reorder fields.
namespace mft {

enum class WireType : std::uint8_t {
  kData = 0,
  kAck = 1,
  kFeedback = 2,
};

struct WireError : std::runtime_error {
  enum class Kind { kTruncated, kBadType, kPayloadTooLarge };
  WireError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
  Kind kind;
};

struct WireConfig {
  int mtu_bytes = kDefaultMtuBytes;
};

// One MTU-sized fragment of an encoded video frame.
struct DataPacket {
  std::uint32_t frame_no = 0;
  std::uint16_t frag_no = 0;
  std::uint16_t frag_count = 1;
  std::uint8_t subflow_id = 0;
  std::uint32_t seq_no = 0;                 // per-subflow, strictly increasing
  std::uint32_t inter_frame_delay_us = 0;   // encoder pause preceding this frame
  std::uint64_t capture_ts_us = 0;          // sender-clock capture time of the frame
  bool is_probe = false;                    // duplicated probe copy
  std::vector<std::uint8_t> payload;

  // type1 + frame4 + frag2 + count2 + subflow1 + seq4 + ifd4 + capture8 +
  // probe1 + paylen2
  static constexpr int kHeaderBytes = 29;

  bool operator==(const DataPacket&) const = default;
};

// Receiver feedback, one per received DataPacket, duplicated on every live
// reverse path.
struct AckPacket {
  std::uint8_t subflow_id = 0;
  std::uint32_t seq_no = 0;
  std::uint32_t frame_no = 0;
  std::uint16_t frag_no = 0;
  std::uint32_t iat_us = 0;          // receiver-measured inter-arrival time
  bool first_on_subflow = false;     // set when iat has no sample yet
  std::uint64_t receiver_ts_us = 0;
  std::uint64_t echo_capture_ts_us = 0;

  static constexpr int kHeaderBytes = 33;

  bool operator==(const AckPacket&) const = default;
};

// Decoder feedback relayed back to the encoder (target size rewritten by the
// sender in transit).
struct FeedbackPacket {
  std::uint32_t frame_no = 0;
  bool complete = false;
  std::uint32_t decode_state_id = 0xFFFFFFFFu;  // sentinel: no state yet
  std::uint32_t target_size_bytes = 0;

  static constexpr int kHeaderBytes = 14;

  bool operator==(const FeedbackPacket&) const = default;
};

inline int max_payload_bytes(const WireConfig& cfg) {
  return cfg.mtu_bytes - DataPacket::kHeaderBytes;
}

std::vector<std::uint8_t> encode_data(const DataPacket& pkt, const WireConfig& cfg = {});
DataPacket decode_data(const std::vector<std::uint8_t>& buf, const WireConfig& cfg = {});

std::vector<std::uint8_t> encode_ack(const AckPacket& ack, const WireConfig& cfg = {});
AckPacket decode_ack(const std::vector<std::uint8_t>& buf, const WireConfig& cfg = {});

std::vector<std::uint8_t> encode_feedback(const FeedbackPacket& fb, const WireConfig& cfg = {});
FeedbackPacket decode_feedback(const std::vector<std::uint8_t>& buf, const WireConfig& cfg = {});

// Leading type octet of a datagram, or throws Truncated on an empty buffer.
WireType peek_type(const std::vector<std::uint8_t>& buf);

}  // namespace mft
