#include "mft/sender.hpp"

#include <algorithm>
#include <cmath>

namespace mft {

std::int64_t target_size_bytes(const std::vector<SubflowSnapshot>& subflows,
                               int mtu_payload_bytes) {
  std::int64_t packets = 0;
  for (const auto& f : subflows) {
    const std::int64_t discounted =
        static_cast<std::int64_t>(std::floor(kCwndDiscount * static_cast<double>(f.cwnd)));
    packets += std::max<std::int64_t>(0, discounted - f.in_flight);
  }
  return packets * mtu_payload_bytes;
}

std::int64_t probe_copy_count(std::int64_t now_us, std::int64_t last_send_ts_us,
                              std::int64_t tau_us, std::int64_t cwnd,
                              std::int64_t in_flight,
                              std::int64_t fragment_count) {
  if (now_us - last_send_ts_us <= tau_us) return 0;
  const std::int64_t allowance = cwnd + kProbePairSize - in_flight;
  return std::max<std::int64_t>(
      0, std::min<std::int64_t>({kProbePairSize, allowance, fragment_count}));
}

Allocation schedule_frame(const std::vector<SubflowSnapshot>& subflows,
                          std::int64_t fragment_count) {
  Allocation alloc;
  alloc.per_subflow.assign(subflows.size(), 0);

  for (std::int64_t placed = 0; placed < fragment_count; ++placed) {
    int best = -1;
    std::int64_t best_y = 0;
    for (std::size_t i = 0; i < subflows.size(); ++i) {
      const auto& f = subflows[i];
      if (alloc.per_subflow[i] >= f.capacity()) continue;
      const std::int64_t y =
          f.owd_us + (f.in_flight + alloc.per_subflow[i] + 1) * f.ewma_iat_us;
      if (best < 0 || y < best_y) {
        best = static_cast<int>(i);
        best_y = y;
      } else if (y == best_y && subflows[i].subflow_id < subflows[best].subflow_id) {
        best = static_cast<int>(i);
      }
    }
    if (best < 0) break;  // every subflow at capacity
    ++alloc.per_subflow[best];
    ++alloc.placed;
  }
  alloc.unplaced = fragment_count - alloc.placed;

  std::int64_t m = 0;
  for (std::size_t i = 0; i < subflows.size(); ++i) {
    const auto& f = subflows[i];
    const std::int64_t x = alloc.per_subflow[i];
    if (x == 0 && f.in_flight == 0) continue;  // idle subflows excluded
    m = std::max(m, f.owd_us + (f.in_flight + x) * f.ewma_iat_us);
  }
  alloc.makespan_us = m;
  return alloc;
}

void OutstandingQueue::push(QueuedFragment frag) { queue_.push_back(std::move(frag)); }

std::vector<OutstandingQueue::QueuedFragment> OutstandingQueue::purge_expired(
    std::int64_t now_us) {
  std::vector<QueuedFragment> dropped;
  // Frames are enqueued in capture order, so deadlines are non-decreasing
  // from the front.
  while (!queue_.empty() && queue_.front().deadline_us <= now_us) {
    const std::uint32_t frame = queue_.front().frame_no;
    while (!queue_.empty() && queue_.front().frame_no == frame) {
      dropped.push_back(std::move(queue_.front()));
      queue_.pop_front();
    }
  }
  return dropped;
}

std::vector<OutstandingQueue::QueuedFragment> OutstandingQueue::pop_up_to(
    std::int64_t budget, std::int64_t now_us) {
  purge_expired(now_us);
  std::vector<QueuedFragment> out;
  while (budget > 0 && !queue_.empty()) {
    out.push_back(std::move(queue_.front()));
    queue_.pop_front();
    --budget;
  }
  return out;
}

}  // namespace mft
