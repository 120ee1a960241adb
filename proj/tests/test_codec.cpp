#include <doctest.h>

#include <cmath>

#include "mft/codec.hpp"

using namespace mft;

namespace {

CodecConfig test_config() {
  CodecConfig cfg;
  cfg.fps = 30;
  cfg.mtu_payload_bytes = 1371;
  cfg.rng_seed = 99;
  return cfg;
}

}  // namespace

TEST_SUITE("codec") {

TEST_CASE("fragmentation fills mtu slices exactly") {
  EncoderShim enc(test_config());
  enc.set_target_size(12'339);
  const FrameJob job = enc.next_frame(0);
  REQUIRE(job.fragments.size() == 9);
  for (const auto& f : job.fragments) CHECK(f.size() == 1371);
  CHECK(job.total_bytes() == 12'339);

  // a trailing partial fragment takes the remainder
  EncoderShim enc2(test_config());
  enc2.set_target_size(3'000);
  const FrameJob job2 = enc2.next_frame(0);
  REQUIRE(job2.fragments.size() == 3);
  CHECK(job2.fragments[0].size() == 1371);
  CHECK(job2.fragments[1].size() == 1371);
  CHECK(job2.fragments[2].size() == 258);
}

TEST_CASE("target zero clamps up to the minimum frame") {
  EncoderShim enc(test_config());
  enc.set_target_size(0);
  const FrameJob job = enc.next_frame(0);
  REQUIRE(job.fragments.size() == 1);
  CHECK(job.total_bytes() == 500);
}

TEST_CASE("payload bytes are deterministic in (seed, frame_no, size)") {
  EncoderShim a(test_config());
  EncoderShim b(test_config());
  a.set_target_size(5'000);
  b.set_target_size(5'000);
  const FrameJob fa = a.next_frame(0);
  const FrameJob fb = b.next_frame(0);
  CHECK(fa.fragments == fb.fragments);

  CodecConfig other = test_config();
  other.rng_seed = 100;
  EncoderShim c(other);
  c.set_target_size(5'000);
  CHECK(c.next_frame(0).fragments != fa.fragments);
}

TEST_CASE("frame cadence and deadline") {
  EncoderShim enc(test_config());
  const FrameJob f0 = enc.next_frame(0);
  const FrameJob f1 = enc.next_frame(33'333);
  CHECK(f0.frame_no == 0);
  CHECK(f1.frame_no == 1);
  CHECK(f0.deadline_us == kDefaultDeltaUs);
  CHECK(f1.deadline_us == 33'333 + kDefaultDeltaUs);

  // inter-frame delay is the interval minus the previous emission span
  EncoderShim enc2(test_config());
  enc2.next_frame(0);
  enc2.note_frame_emitted(0, 12'000);
  const FrameJob g1 = enc2.next_frame(33'333);
  CHECK(g1.inter_frame_delay_us == 33'333 - 12'000);
}

TEST_CASE("feedback advances state, partial feedback enters recovery") {
  EncoderShim enc(test_config());
  enc.next_frame(0);
  enc.next_frame(33'333);

  enc.on_feedback({0, true, 0});
  CHECK(enc.state_id() == 0);
  CHECK_FALSE(enc.in_recovery());

  enc.on_feedback({1, false, 0});
  CHECK(enc.in_recovery());
  CHECK(enc.state_id() == 0);  // rolls back to the last confirmed state
  CHECK(enc.recovery_entries() == 1);

  // duplicate feedback from the second reverse path is a no-op
  enc.on_feedback({1, true, 1});
  const bool recovered = !enc.in_recovery();
  enc.on_feedback({1, false, 0});
  CHECK(!enc.in_recovery() == recovered);

  enc.on_feedback({2, true, 2});
  CHECK_FALSE(enc.in_recovery());
  CHECK(enc.state_id() == 2);
}

TEST_CASE("missing feedback beyond the two-frame horizon triggers recovery") {
  EncoderShim enc(test_config());
  enc.next_frame(0);
  enc.next_frame(33'333);
  enc.next_frame(66'666);
  CHECK_FALSE(enc.in_recovery());
  // frame 0 still unacknowledged when frame 3 is emitted
  enc.next_frame(99'999);
  CHECK(enc.in_recovery());
}

TEST_CASE("in-order complete feedback never enters recovery") {
  EncoderShim enc(test_config());
  for (std::uint32_t k = 0; k < 100; ++k) {
    enc.next_frame(static_cast<std::int64_t>(k) * 33'333);
    enc.on_feedback({k, true, k});
    CHECK_FALSE(enc.in_recovery());
  }
  CHECK(enc.recovery_entries() == 0);
}

TEST_CASE("quality proxy") {
  CHECK(quality_proxy(0, 3000, false, 500) == 0.0);                 // dropped
  CHECK(quality_proxy(500, 500, true, 500) == doctest::Approx(1.0));  // log2(2)
  CHECK(quality_proxy(3000, 3000, true, 500) == doctest::Approx(std::log2(7.0)));
  // partial frames scale by the delivered fraction
  CHECK(quality_proxy(1500, 3000, false, 500) ==
        doctest::Approx(std::log2(4.0) * 0.5));
}

}  // TEST_SUITE
