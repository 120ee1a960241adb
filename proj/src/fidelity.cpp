#include "mft/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mft {
namespace {

std::int64_t packet_spacing_us(const FidelityConfig& cfg, std::int64_t k) {
  const double spacing =
      static_cast<double>(cfg.mtu_bytes) * 8.0 / (cfg.rate_mbps * 1e6) * 1e6;
  return static_cast<std::int64_t>(std::floor(k * spacing));
}

// Traces are built at microsecond precision here; the sub-op-spacing effects
// this experiment measures would otherwise drown in millisecond file-format
// rounding.
LinkDirection build_direction(const FidelityConfig& cfg, ReplayMode mode) {
  if (mode == ReplayMode::kCycleDelay) {
    CellNemTrace trace;
    for (std::int64_t pd : {cfg.pd0_us, cfg.pd1_us}) {
      CellNemCycle cycle;
      cycle.pd_us = pd;
      cycle.duration_us = cfg.cycle_ms * kUsPerMs;
      for (std::int64_t k = 1;; ++k) {
        const std::int64_t at = packet_spacing_us(cfg, k);
        if (at >= cycle.duration_us) break;
        cycle.ops_us.push_back(at);
      }
      trace.cycles.push_back(std::move(cycle));
    }
    return LinkDirection(std::move(trace));
  }

  // Folded mode: the opportunity timeline a constant-delay recorder would
  // capture through the stepped link; saturation arrival k lands at
  // send_k + pd(send_k), so the step shows up as a one-time hole in the ops.
  const std::int64_t total_us = 2 * cfg.cycle_ms * kUsPerMs;
  const std::int64_t step_at = cfg.cycle_ms * kUsPerMs;
  LinkTrace trace;
  for (std::int64_t k = 1;; ++k) {
    const std::int64_t send = packet_spacing_us(cfg, k);
    if (send >= total_us) break;
    const std::int64_t shift = send < step_at ? 0 : cfg.pd1_us - cfg.pd0_us;
    trace.ops_us.push_back(send + shift);
  }
  trace.duration_us = total_us + (cfg.pd1_us - cfg.pd0_us);
  return LinkDirection(std::move(trace), cfg.pd0_us);
}

}  // namespace

std::vector<OwdPoint> run_fidelity(const FidelityConfig& cfg, ReplayMode mode,
                                   SenderPattern pattern) {
  LinkDirection dir = build_direction(cfg, mode);
  const std::int64_t total_us = 2 * cfg.cycle_ms * kUsPerMs;

  std::vector<std::int64_t> sends;
  if (pattern == SenderPattern::kBulk) {
    for (std::int64_t k = 0;; ++k) {
      const std::int64_t at = packet_spacing_us(cfg, k);
      if (at >= total_us) break;
      sends.push_back(at);
    }
  } else {
    for (std::int64_t burst = 0;; ++burst) {
      const std::int64_t base = burst * cfg.burst_period_us;
      if (base >= total_us) break;
      for (int i = 0; i < cfg.burst_packets; ++i) {
        const std::int64_t at = base + packet_spacing_us(cfg, i);
        if (at < total_us) sends.push_back(at);
      }
    }
    std::sort(sends.begin(), sends.end());
  }

  std::vector<OwdPoint> points;
  points.reserve(sends.size());
  EmuPacket pkt;
  pkt.size_bytes = cfg.mtu_bytes;
  for (std::int64_t at : sends) {
    const std::int64_t delivered = dir.send(pkt, at);
    points.push_back({at, delivered - at});
  }
  return points;
}

FidelityCheck evaluate_fidelity(const std::vector<OwdPoint>& points,
                                std::int64_t step_at_us,
                                std::int64_t step_amplitude_us,
                                std::int64_t tolerance_us) {
  FidelityCheck check;
  std::int64_t base = std::numeric_limits<std::int64_t>::max();
  std::int64_t post_min = std::numeric_limits<std::int64_t>::max();
  std::vector<const OwdPoint*> post;
  for (const auto& p : points) {
    if (p.send_us < step_at_us) {
      base = std::min(base, p.owd_us);
    } else {
      post.push_back(&p);
      post_min = std::min(post_min, p.owd_us);
    }
  }
  check.base_owd_us = base;
  check.post_count = static_cast<std::int64_t>(post.size());
  if (post.empty()) return check;
  check.floor_shift_us = post_min - base;
  const std::int64_t threshold = base + step_amplitude_us - tolerance_us;
  for (std::size_t i = 0; i < post.size(); ++i) {
    if (post[i]->owd_us >= threshold) {
      ++check.post_elevated;
      if (i >= post.size() / 2) ++check.tail_elevated;
    }
  }
  return check;
}

}  // namespace mft
