#pragma once
#include <cstdint>

// Central table of protocol and session defaults. Every value here can be
// overridden through SessionConfig / the CLI; see README for the full table.
namespace mft {

inline constexpr int kDefaultMtuBytes = 1400;
inline constexpr std::int64_t kDefaultDeltaUs = 100'000;   // end-to-end delay budget
inline constexpr int kDefaultFps = 30;
inline constexpr double kDefaultEwmaAlpha = 0.1;
inline constexpr std::int64_t kDefaultOmegaUs = 5'000;     // decode-time allowance

// Estimator bootstrap (used until the first real samples arrive).
inline constexpr std::int64_t kSeedIatUs = 10'000;
inline constexpr std::int64_t kSeedRttUs = 40'000;
inline constexpr std::int64_t kRttWindowUs = 1'000'000;

// Probing.
inline constexpr std::int64_t kProbeIntervalCapUs = 1'000'000;
inline constexpr int kProbePairSize = 2;

// Rate control.
inline constexpr double kCwndDiscount = 0.8;
inline constexpr std::int64_t kDefaultMinFrameBytes = 500;
inline constexpr std::int64_t kDefaultMaxFrameBytes = 250'000;

// Recorder.
inline constexpr int kDefaultCycleSeconds = 5;
inline constexpr std::int64_t kDefaultProbeIntervalMs = 100;
inline constexpr int kDefaultProbeBytes = 50;
inline constexpr std::int64_t kDefaultDrainTimeoutMs = 1'000;

inline constexpr std::int64_t kUsPerMs = 1'000;
inline constexpr std::int64_t kUsPerSec = 1'000'000;

}  // namespace mft
