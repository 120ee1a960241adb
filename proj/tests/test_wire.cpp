#include <doctest.h>

#include <random>

#include "mft/wire.hpp"

using namespace mft;

TEST_SUITE("wire") {

TEST_CASE("data header is 29 bytes and a 1400 mtu admits 1371 payload bytes") {
  CHECK(DataPacket::kHeaderBytes == 29);
  WireConfig cfg;
  CHECK(max_payload_bytes(cfg) == 1371);

  DataPacket pkt;
  pkt.payload.assign(1371, 0x42);
  CHECK(encode_data(pkt, cfg).size() == 1400);

  pkt.payload.assign(1372, 0x42);
  CHECK_THROWS_AS(encode_data(pkt, cfg), WireError);
  try {
    encode_data(pkt, cfg);
  } catch (const WireError& e) {
    CHECK(e.kind == WireError::Kind::kPayloadTooLarge);
  }
}

TEST_CASE("data packet golden bytes") {
  DataPacket pkt;
  pkt.frame_no = 0x01020304;
  pkt.frag_no = 0x0506;
  pkt.frag_count = 0x0708;
  pkt.subflow_id = 0x09;
  pkt.seq_no = 0x0A0B0C0D;
  pkt.inter_frame_delay_us = 0x0E0F1011;
  pkt.capture_ts_us = 0x1213141516171819ull;
  pkt.is_probe = true;
  pkt.payload = {0xAA, 0xBB};

  const std::vector<std::uint8_t> expected = {
      0x00,                                            // type
      0x01, 0x02, 0x03, 0x04,                          // frame_no
      0x05, 0x06,                                      // frag_no
      0x07, 0x08,                                      // frag_count
      0x09,                                            // subflow_id
      0x0A, 0x0B, 0x0C, 0x0D,                          // seq_no
      0x0E, 0x0F, 0x10, 0x11,                          // inter_frame_delay_us
      0x12, 0x13, 0x14, 0x15, 0x16, 0x17, 0x18, 0x19,  // capture_ts_us
      0x01,                                            // is_probe
      0x00, 0x02,                                      // payload length
      0xAA, 0xBB,
  };
  CHECK(encode_data(pkt) == expected);
  CHECK(decode_data(expected) == pkt);
}

TEST_CASE("ack packet golden bytes") {
  AckPacket ack;
  ack.subflow_id = 0x01;
  ack.seq_no = 0x02030405;
  ack.frame_no = 0x06070809;
  ack.frag_no = 0x0A0B;
  ack.iat_us = 0x0C0D0E0F;
  ack.first_on_subflow = false;
  ack.receiver_ts_us = 0x1011121314151617ull;
  ack.echo_capture_ts_us = 0x18191A1B1C1D1E1Full;

  const std::vector<std::uint8_t> expected = {
      0x01,
      0x01,
      0x02, 0x03, 0x04, 0x05,
      0x06, 0x07, 0x08, 0x09,
      0x0A, 0x0B,
      0x0C, 0x0D, 0x0E, 0x0F,
      0x00,
      0x10, 0x11, 0x12, 0x13, 0x14, 0x15, 0x16, 0x17,
      0x18, 0x19, 0x1A, 0x1B, 0x1C, 0x1D, 0x1E, 0x1F,
  };
  CHECK(expected.size() == AckPacket::kHeaderBytes);
  CHECK(encode_ack(ack) == expected);
  CHECK(decode_ack(expected) == ack);
}

TEST_CASE("decode error taxonomy") {
  CHECK_THROWS_AS(decode_data({}), WireError);
  try {
    decode_data({});
  } catch (const WireError& e) {
    CHECK(e.kind == WireError::Kind::kTruncated);
  }

  // ACK image handed to the data decoder
  const auto ack_bytes = encode_ack(AckPacket{});
  try {
    decode_data(ack_bytes);
    CHECK(false);
  } catch (const WireError& e) {
    CHECK(e.kind == WireError::Kind::kBadType);
  }

  // declared payload longer than the buffer
  DataPacket pkt;
  pkt.payload = {1, 2, 3, 4};
  auto bytes = encode_data(pkt);
  bytes.pop_back();
  try {
    decode_data(bytes);
    CHECK(false);
  } catch (const WireError& e) {
    CHECK(e.kind == WireError::Kind::kTruncated);
  }
}

TEST_CASE("ack decode errors mirror the data taxonomy") {
  auto bytes = encode_ack(AckPacket{});
  bytes.resize(bytes.size() - 1);
  try {
    decode_ack(bytes);
    CHECK(false);
  } catch (const WireError& e) {
    CHECK(e.kind == WireError::Kind::kTruncated);
  }
  try {
    decode_ack(encode_data(DataPacket{}));
    CHECK(false);
  } catch (const WireError& e) {
    CHECK(e.kind == WireError::Kind::kBadType);
  }
  CHECK_THROWS_AS(decode_ack({}), WireError);
}

TEST_CASE("probe flag roundtrips") {
  DataPacket pkt;
  pkt.frame_no = 7;
  pkt.is_probe = true;
  pkt.payload = {0x01};
  const auto decoded = decode_data(encode_data(pkt));
  CHECK(decoded.is_probe);
  CHECK(decoded == pkt);
}

TEST_CASE("feedback roundtrip") {
  FeedbackPacket fb;
  fb.frame_no = 42;
  fb.complete = true;
  fb.decode_state_id = 41;
  fb.target_size_bytes = 12339;
  CHECK(decode_feedback(encode_feedback(fb)) == fb);
  CHECK(encode_feedback(fb).size() == FeedbackPacket::kHeaderBytes);

  const auto data_bytes = encode_data(DataPacket{});
  CHECK_THROWS_AS(decode_feedback(data_bytes), WireError);
}

TEST_CASE("roundtrip property over randomized packets") {
  std::mt19937_64 rng(20240717);
  for (int iter = 0; iter < 500; ++iter) {
    DataPacket pkt;
    pkt.frame_no = static_cast<std::uint32_t>(rng());
    pkt.frag_count = static_cast<std::uint16_t>(rng() % 64 + 1);
    pkt.frag_no = static_cast<std::uint16_t>(rng() % pkt.frag_count);
    pkt.subflow_id = static_cast<std::uint8_t>(rng() % 4);
    pkt.seq_no = static_cast<std::uint32_t>(rng());
    pkt.inter_frame_delay_us = static_cast<std::uint32_t>(rng() % 200000);
    pkt.capture_ts_us = rng();
    pkt.is_probe = rng() % 2 == 0;
    pkt.payload.resize(rng() % 1372);
    for (auto& b : pkt.payload) b = static_cast<std::uint8_t>(rng());

    const auto bytes = encode_data(pkt);
    CHECK(bytes.size() <= 1400);
    CHECK(encode_data(pkt) == bytes);  // purity
    CHECK(decode_data(bytes) == pkt);

    AckPacket ack;
    ack.subflow_id = static_cast<std::uint8_t>(rng() % 4);
    ack.seq_no = static_cast<std::uint32_t>(rng());
    ack.frame_no = static_cast<std::uint32_t>(rng());
    ack.frag_no = static_cast<std::uint16_t>(rng());
    ack.iat_us = static_cast<std::uint32_t>(rng());
    ack.first_on_subflow = rng() % 2 == 0;
    ack.receiver_ts_us = rng();
    ack.echo_capture_ts_us = rng();
    CHECK(decode_ack(encode_ack(ack)) == ack);
  }
}

}  // TEST_SUITE
