#include "mft/subflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mft {

IatSample receiver_iat(std::int64_t recv_ts_us,
                       std::optional<std::int64_t> prev_recv_ts_us,
                       std::int64_t inter_frame_delay_us) {
  if (!prev_recv_ts_us.has_value()) {
    return {0, true};
  }
  const std::int64_t gap = recv_ts_us - *prev_recv_ts_us;
  return {std::max<std::int64_t>(0, gap - inter_frame_delay_us), false};
}

void SubflowEstimator::note_sent(std::uint32_t seq_no, std::int64_t now_us,
                                 std::int64_t deadline_us) {
  outstanding_.emplace(seq_no, SentInfo{now_us, deadline_us});
  last_send_ts_us_ = now_us;
}

void SubflowEstimator::on_ack(const AckPacket& ack, std::int64_t now_us) {
  prune(now_us);

  auto it = outstanding_.find(ack.seq_no);
  const bool fresh = it != outstanding_.end();
  SentInfo info{};
  if (fresh) {
    info = it->second;
    outstanding_.erase(it);
    acked_.emplace(ack.seq_no, info);
  } else {
    auto dup = acked_.find(ack.seq_no);
    if (dup == acked_.end()) {
      return;  // unknown seq: stray duplicate, ignored silently
    }
    info = dup->second;
  }

  // RTT from the sender-side send timestamp. ACKs for packets whose frame
  // deadline already passed measure a queue that no longer exists; they clear
  // accounting but contribute no RTT sample.
  if (now_us <= info.deadline_us) {
    push_rtt(now_us - info.send_ts_us, now_us);
  }

  if (fresh && !ack.first_on_subflow) {
    if (!has_iat_) {
      ewma_iat_us_ = static_cast<double>(ack.iat_us);
      has_iat_ = true;
    } else {
      const double a = cfg_.ewma_alpha;
      ewma_iat_us_ = (1.0 - a) * ewma_iat_us_ + a * static_cast<double>(ack.iat_us);
    }
  }
}

void SubflowEstimator::push_rtt(std::int64_t rtt_us, std::int64_t now_us) {
  rtt_us = std::max<std::int64_t>(0, rtt_us);
  while (!rtt_window_.empty() && rtt_window_.back().second >= rtt_us) {
    rtt_window_.pop_back();
  }
  rtt_window_.emplace_back(now_us, rtt_us);
  had_rtt_sample_ = true;
  last_owd_us_ = rtt_window_.front().second / 2;
}

void SubflowEstimator::prune(std::int64_t now_us) {
  const std::int64_t cutoff = now_us - cfg_.rtt_window_us;
  while (!rtt_window_.empty() && rtt_window_.front().first < cutoff) {
    rtt_window_.pop_front();
  }
  if (!acked_.empty()) {
    const std::int64_t keep_after = now_us - 3 * cfg_.rtt_window_us;
    for (auto it = acked_.begin(); it != acked_.end();) {
      it = it->second.send_ts_us < keep_after ? acked_.erase(it) : std::next(it);
    }
  }
}

std::int64_t SubflowEstimator::ewma_iat_us() const {
  if (!has_iat_) return cfg_.seed_iat_us;
  return static_cast<std::int64_t>(std::llround(ewma_iat_us_));
}

std::int64_t SubflowEstimator::cwnd_packets(std::int64_t now_us) {
  prune(now_us);

  std::int64_t min_rtt;
  if (rtt_window_.empty()) {
    if (had_rtt_sample_) return 0;  // stale path, no evidence in the window
    min_rtt = cfg_.seed_rtt_us;
  } else {
    min_rtt = rtt_window_.front().second;
  }

  const double iat = has_iat_ ? std::max(ewma_iat_us_, 1.0)
                              : static_cast<double>(cfg_.seed_iat_us);
  const double numerator =
      static_cast<double>(cfg_.delta_us) - static_cast<double>(min_rtt) / 2.0;
  if (numerator <= 0.0) return 0;
  return static_cast<std::int64_t>(std::floor(numerator / iat));
}

std::optional<std::int64_t> SubflowEstimator::owd_estimate_us(std::int64_t now_us) {
  prune(now_us);
  if (rtt_window_.empty()) return std::nullopt;
  return rtt_window_.front().second / 2;
}

std::int64_t SubflowEstimator::owd_us_or_seed() const {
  return had_rtt_sample_ ? last_owd_us_ : cfg_.seed_rtt_us / 2;
}

std::int64_t SubflowEstimator::probe_interval_us() const {
  return std::min<std::int64_t>(kProbeIntervalCapUs, 2 * ewma_iat_us());
}

}  // namespace mft
