#pragma once
#include <cstdint>
#include <vector>

#include "mft/emulib.hpp"
#include "mft/traces.hpp"

namespace mft {

// Replay-fidelity experiment: one link whose one-way propagation delay steps
// pd0 -> pd1 at the cycle boundary, replayed two ways (per-cycle delay vs the
// delay change folded into the delivery opportunities, as a constant-delay
// replayer would record it) and driven by two senders (bulk at link rate vs
// an on-off burst pattern).
struct FidelityConfig {
  double rate_mbps = 6.0;
  std::int64_t pd0_us = 10'000;
  std::int64_t pd1_us = 30'000;
  std::int64_t cycle_ms = 2000;  // step happens at one cycle boundary
  int mtu_bytes = kDefaultMtuBytes;
  int burst_packets = 3;
  std::int64_t burst_period_us = 100'000;
};

enum class ReplayMode { kCycleDelay, kFoldedDelay };
enum class SenderPattern { kBulk, kOnOff };

struct OwdPoint {
  std::int64_t send_us;
  std::int64_t owd_us;
};

std::vector<OwdPoint> run_fidelity(const FidelityConfig& cfg, ReplayMode mode,
                                   SenderPattern pattern);

// Elevation verdicts against the pre-step OWD floor.
struct FidelityCheck {
  std::int64_t base_owd_us = 0;        // min OWD among pre-step packets
  std::int64_t floor_shift_us = 0;     // min post-step OWD minus the base
  std::int64_t post_count = 0;
  std::int64_t post_elevated = 0;      // post-step packets >= base + step - tol
  std::int64_t tail_elevated = 0;      // elevated among the last half of them
};

FidelityCheck evaluate_fidelity(const std::vector<OwdPoint>& points,
                                std::int64_t step_at_us,
                                std::int64_t step_amplitude_us,
                                std::int64_t tolerance_us = 1000);

}  // namespace mft
