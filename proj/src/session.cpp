#include "mft/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>
#include <sstream>

#include "mft/codec.hpp"
#include "mft/receiver.hpp"
#include "mft/sender.hpp"
#include "mft/subflow.hpp"
#include "mft/wire.hpp"

namespace mft {

void SessionConfig::validate() const {
  if (duration_s <= 0) throw ConfigError("duration must be positive");
  if (fps <= 0) throw ConfigError("fps must be positive");
  if (links.empty()) throw ConfigError("at least one link is required");
  if (mtu_bytes <= DataPacket::kHeaderBytes) throw ConfigError("mtu too small");
  if (mode == Mode::kSinglePath &&
      (single_path_link < 0 ||
       single_path_link >= static_cast<int>(links.size()))) {
    throw ConfigError("single-path link index out of range");
  }
  for (int idx : subflow_links) {
    if (idx < 0 || idx >= static_cast<int>(links.size())) {
      throw ConfigError("subflow link index out of range");
    }
  }
  if (min_frame_bytes <= 0 || max_frame_bytes < min_frame_bytes) {
    throw ConfigError("bad frame size clamp range");
  }
}

namespace {

LinkDirection make_direction(const DirectionSpec& spec, int mtu_bytes) {
  LinkDirection dir = spec.kind == DirectionSpec::Kind::kCellNem
                          ? LinkDirection(spec.cellnem)
                          : LinkDirection(spec.flat, spec.pd_us);
  dir.mtu_bytes = mtu_bytes;
  return dir;
}

// Full bidirectional session over emulated links: frames flow forward, ACKs
// and decoder feedback return duplicated on every reverse path, all under one
// deterministic event loop.
class SessionEngine {
 public:
  explicit SessionEngine(const SessionConfig& config)
      : cfg_(config),
        encoder_(CodecConfig{config.fps, config.min_frame_bytes,
                             config.max_frame_bytes,
                             config.mtu_bytes - DataPacket::kHeaderBytes,
                             config.delta_us, config.seed}),
        reassembler_(ReceiverConfig{config.delta_us, config.omega_us,
                                    config.frame_interval_us()}) {
    wire_cfg_.mtu_bytes = cfg_.mtu_bytes;

    for (const auto& setup : cfg_.links) {
      links_.push_back(std::make_unique<EmulatedLink>(
          make_direction(setup.forward, cfg_.mtu_bytes),
          make_direction(setup.reverse, cfg_.mtu_bytes)));
    }

    if (cfg_.mode == SessionConfig::Mode::kSinglePath) {
      subflow_link_ = {cfg_.single_path_link};
    } else if (!cfg_.subflow_links.empty()) {
      subflow_link_ = cfg_.subflow_links;
    } else {
      for (std::size_t i = 0; i < links_.size(); ++i) {
        subflow_link_.push_back(static_cast<int>(i));
      }
    }

    SubflowConfig sub_cfg;
    sub_cfg.delta_us = cfg_.delta_us;
    sub_cfg.ewma_alpha = cfg_.ewma_alpha;
    for (std::size_t f = 0; f < subflow_link_.size(); ++f) {
      subflows_.emplace_back(static_cast<std::uint8_t>(f), sub_cfg);
    }

    std::set<int> reverse(subflow_link_.begin(), subflow_link_.end());
    reverse_links_.assign(reverse.begin(), reverse.end());
  }

  SessionMetrics run() {
    const std::int64_t total_frames = cfg_.duration_s * cfg_.fps;
    const std::int64_t duration_us = total_frames * cfg_.frame_interval_us();
    const std::int64_t settle_us =
        cfg_.delta_us + 5 * cfg_.frame_interval_us() + 10'000;
    const std::int64_t end_us = duration_us + settle_us;

    loop_.schedule(0, [this, total_frames] { on_capture(total_frames); });
    schedule_rx_tick(end_us);

    if (cfg_.clock == SessionConfig::Clock::kRealtime) {
      loop_.run_realtime(end_us);
    } else {
      loop_.run_until(end_us);
    }

    finalize();
    return std::move(metrics_);
  }

 private:
  struct PendingFrame {
    std::int64_t last_send_us = 0;
    bool any_send = false;
  };

  void on_capture(std::int64_t total_frames) {
    const std::int64_t now = loop_.now_us();

    // Report the previous frame's emission span so the encoder can stamp the
    // inter-frame delay of this one.
    if (!metrics_.frames.empty()) {
      const auto& prev = metrics_.frames.back();
      auto it = pending_.find(prev.frame_no);
      const std::int64_t span =
          it != pending_.end() && it->second.any_send
              ? it->second.last_send_us - prev.capture_us
              : 0;
      encoder_.note_frame_emitted(prev.frame_no, span);
    }

    FrameJob job = encoder_.next_frame(now);

    FrameRecord rec;
    rec.frame_no = job.frame_no;
    rec.capture_us = now;
    rec.encoded_bytes = job.total_bytes();
    rec.fragment_count = static_cast<int>(job.fragments.size());
    for (auto& est : subflows_) {
      rec.diag.push_back(SubflowDiag{est.cwnd_packets(now), est.in_flight(),
                                     est.ewma_iat_us(),
                                     est.owd_estimate_us(now).value_or(-1)});
    }
    frame_index_[job.frame_no] = metrics_.frames.size();
    metrics_.frames.push_back(rec);
    pending_[job.frame_no];

    emit_frame(job, now);

    if (static_cast<std::int64_t>(encoder_.frames_emitted()) < total_frames) {
      loop_.schedule(now + cfg_.frame_interval_us(),
                     [this, total_frames] { on_capture(total_frames); });
    }
  }

  void emit_frame(const FrameJob& job, std::int64_t now) {
    // Adaptive probing first: a subflow silent for more than tau gets copies
    // of the frame's first fragments, within the probe allowance.
    for (auto& est : subflows_) {
      const std::int64_t copies = probe_copy_count(
          now, est.last_send_ts_us(), est.probe_interval_us(),
          est.cwnd_packets(now), est.in_flight(),
          static_cast<std::int64_t>(job.fragments.size()));
      for (std::int64_t i = 0; i < copies; ++i) {
        send_fragment(est.id(), job.frame_no, static_cast<std::uint16_t>(i),
                      static_cast<std::uint16_t>(job.fragments.size()),
                      job.capture_ts_us, job.deadline_us,
                      job.inter_frame_delay_us, job.fragments[i], true, now);
        ++metrics_.probes_sent;
      }
    }

    const auto snapshots = build_snapshots(now);
    const Allocation alloc =
        schedule_frame(snapshots, static_cast<std::int64_t>(job.fragments.size()));

    std::size_t frag = 0;
    for (std::size_t f = 0; f < subflows_.size(); ++f) {
      for (std::int64_t i = 0; i < alloc.per_subflow[f]; ++i, ++frag) {
        send_fragment(subflows_[f].id(), job.frame_no,
                      static_cast<std::uint16_t>(frag),
                      static_cast<std::uint16_t>(job.fragments.size()),
                      job.capture_ts_us, job.deadline_us,
                      job.inter_frame_delay_us, job.fragments[frag], false, now);
      }
    }

    for (; frag < job.fragments.size(); ++frag) {
      queue_.push(OutstandingQueue::QueuedFragment{
          job.frame_no, static_cast<std::uint16_t>(frag),
          static_cast<std::uint16_t>(job.fragments.size()), job.capture_ts_us,
          job.deadline_us, job.inter_frame_delay_us, job.fragments[frag]});
    }
  }

  std::vector<SubflowSnapshot> build_snapshots(std::int64_t now) {
    std::vector<SubflowSnapshot> snaps;
    snaps.reserve(subflows_.size());
    for (auto& est : subflows_) {
      SubflowSnapshot s;
      s.subflow_id = est.id();
      s.owd_us = est.owd_estimate_us(now).value_or(est.owd_us_or_seed());
      s.ewma_iat_us = std::max<std::int64_t>(1, est.ewma_iat_us());
      s.in_flight = est.in_flight();
      s.cwnd = est.cwnd_packets(now);
      snaps.push_back(s);
    }
    return snaps;
  }

  void send_fragment(std::uint8_t subflow, std::uint32_t frame_no,
                     std::uint16_t frag_no, std::uint16_t frag_count,
                     std::int64_t capture_us, std::int64_t deadline_us,
                     std::int64_t ifd_us, const std::vector<std::uint8_t>& payload,
                     bool is_probe, std::int64_t now) {
    auto& est = subflows_[subflow];
    DataPacket pkt;
    pkt.frame_no = frame_no;
    pkt.frag_no = frag_no;
    pkt.frag_count = frag_count;
    pkt.subflow_id = subflow;
    pkt.seq_no = est.next_seq();
    pkt.inter_frame_delay_us = static_cast<std::uint32_t>(
        std::clamp<std::int64_t>(ifd_us, 0, 0xFFFFFFFFll));
    pkt.capture_ts_us = static_cast<std::uint64_t>(capture_us);
    pkt.is_probe = is_probe;
    pkt.payload = payload;

    est.note_sent(pkt.seq_no, now, deadline_us);
    if (est.in_flight() > est.cwnd_packets(now) + kProbePairSize) {
      ++metrics_.cwnd_violations;
    }

    EmuPacket wire;
    wire.bytes = encode_data(pkt, wire_cfg_);
    wire.size_bytes = static_cast<int>(wire.bytes.size());
    const int link = subflow_link_[subflow];
    const std::int64_t at =
        links_[link]->send(Direction::kForward, wire, now);
    loop_.schedule(at, [this] { pump(); });
    ++metrics_.packets_sent;

    auto idx = frame_index_.find(frame_no);
    if (idx != frame_index_.end()) {
      metrics_.frames[idx->second].subflow_bytes[subflow] +=
          static_cast<std::int64_t>(payload.size());
    }
    auto& pending = pending_[frame_no];
    pending.last_send_us = now;
    pending.any_send = true;
  }

  void pump() {
    const std::int64_t now = loop_.now_us();
    for (std::size_t l = 0; l < links_.size(); ++l) {
      for (auto& d : links_[l]->step(now)) {
        if (d.dir == Direction::kForward) {
          on_receiver_datagram(d.pkt.bytes, now);
        } else {
          on_sender_datagram(d.pkt.bytes, now);
        }
      }
    }
  }

  // Reverse links whose subflow is currently live at the receiver.
  std::vector<int> live_reverse_links(std::int64_t now) {
    std::set<int> links;
    for (std::uint8_t f : reassembler_.live_subflows(now)) {
      if (f < subflow_link_.size()) links.insert(subflow_link_[f]);
    }
    if (links.empty()) return reverse_links_;
    return {links.begin(), links.end()};
  }

  void on_receiver_datagram(const std::vector<std::uint8_t>& bytes,
                            std::int64_t now) {
    const DataPacket pkt = decode_data(bytes, wire_cfg_);
    auto result = reassembler_.on_data(pkt, now);

    EmuPacket ack;
    ack.bytes = encode_ack(result.ack, wire_cfg_);
    ack.size_bytes = static_cast<int>(ack.bytes.size());
    for (int link : live_reverse_links(now)) {
      const std::int64_t at = links_[link]->send(Direction::kReverse, ack, now);
      loop_.schedule(at, [this] { pump(); });
    }

    for (const auto& rel : result.released) on_frame_released(rel, now);
  }

  void on_sender_datagram(const std::vector<std::uint8_t>& bytes,
                          std::int64_t now) {
    switch (peek_type(bytes)) {
      case WireType::kAck: {
        const AckPacket ack = decode_ack(bytes, wire_cfg_);
        if (ack.subflow_id >= subflows_.size()) return;
        subflows_[ack.subflow_id].on_ack(ack, now);
        ++metrics_.acks_received;
        drain_outstanding(ack.subflow_id, now);
        return;
      }
      case WireType::kFeedback: {
        const FeedbackPacket fb = decode_feedback(bytes, wire_cfg_);
        const std::int64_t target = target_size_bytes(
            build_snapshots(now), cfg_.mtu_bytes - DataPacket::kHeaderBytes);
        encoder_.set_target_size(target);
        encoder_.on_feedback(
            DecoderFeedback{fb.frame_no, fb.complete, fb.decode_state_id});
        return;
      }
      default:
        return;
    }
  }

  void drain_outstanding(std::uint8_t subflow, std::int64_t now) {
    auto& est = subflows_[subflow];
    for (const auto& dropped : queue_.purge_expired(now)) {
      auto idx = frame_index_.find(dropped.frame_no);
      if (idx != frame_index_.end()) {
        metrics_.frames[idx->second].sender_dropped = true;
      }
    }
    const std::int64_t headroom = est.cwnd_packets(now) - est.in_flight();
    if (headroom <= 0) return;
    for (auto& frag : queue_.pop_up_to(headroom, now)) {
      send_fragment(subflow, frag.frame_no, frag.frag_no, frag.frag_count,
                    frag.capture_ts_us, frag.deadline_us,
                    frag.inter_frame_delay_us, frag.payload, false, now);
    }
  }

  void on_frame_released(const ReleasedFrame& rel, std::int64_t now) {
    if (last_released_.has_value() && rel.frame_no <= *last_released_) {
      metrics_.ordering_ok = false;
    }
    last_released_ = rel.frame_no;

    auto idx = frame_index_.find(rel.frame_no);
    if (idx != frame_index_.end()) {
      auto& rec = metrics_.frames[idx->second];
      rec.release_us = rel.release_ts_us;
      rec.delivered_bytes = rel.delivered_bytes;
      rec.complete = rel.complete;
    }

    const DecoderFeedback fb =
        decoder_.on_frame_released(rel.frame_no, rel.complete);
    FeedbackPacket out;
    out.frame_no = fb.frame_no;
    out.complete = fb.complete;
    out.decode_state_id = fb.decode_state_id;
    out.target_size_bytes = 0;  // rewritten by the sender in transit

    EmuPacket wire;
    wire.bytes = encode_feedback(out, wire_cfg_);
    wire.size_bytes = static_cast<int>(wire.bytes.size());
    for (int link : live_reverse_links(now)) {
      const std::int64_t at = links_[link]->send(Direction::kReverse, wire, now);
      loop_.schedule(at, [this] { pump(); });
    }
  }

  void schedule_rx_tick(std::int64_t end_us) {
    loop_.schedule(loop_.now_us() + kUsPerMs, [this, end_us] {
      const std::int64_t now = loop_.now_us();
      for (const auto& rel : reassembler_.forward_ready(now)) {
        on_frame_released(rel, now);
      }
      if (now < end_us) schedule_rx_tick(end_us);
    });
  }

  void finalize() {
    for (auto& rec : metrics_.frames) {
      rec.quality = quality_proxy(rec.delivered_bytes, rec.encoded_bytes,
                                  rec.release_us.has_value() && rec.complete,
                                  cfg_.min_frame_bytes);
    }
    metrics_.recovery_entries = encoder_.recovery_entries();
  }

  SessionConfig cfg_;
  WireConfig wire_cfg_;
  EventLoop loop_;
  std::vector<std::unique_ptr<EmulatedLink>> links_;
  std::vector<int> subflow_link_;
  std::vector<int> reverse_links_;
  std::vector<SubflowEstimator> subflows_;
  OutstandingQueue queue_;
  EncoderShim encoder_;
  Reassembler reassembler_;
  DecoderShim decoder_;

  SessionMetrics metrics_;
  std::map<std::uint32_t, std::size_t> frame_index_;
  std::map<std::uint32_t, PendingFrame> pending_;
  std::optional<std::uint32_t> last_released_;
};

}  // namespace

SessionMetrics run_session(const SessionConfig& config) {
  config.validate();
  SessionEngine engine(config);
  return engine.run();
}

std::int64_t percentile_nearest_rank(std::vector<std::int64_t> values, int pct) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  std::size_t rank = pct * values.size() / 100 + 1;  // 1-based
  rank = std::min(rank, values.size());
  return values[rank - 1];
}

double percentile_nearest_rank(std::vector<double> values, int pct) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  std::size_t rank = pct * values.size() / 100 + 1;
  rank = std::min(rank, values.size());
  return values[rank - 1];
}

RunSummary summarize(const std::string& label, const SessionMetrics& metrics,
                     const SessionConfig& config) {
  RunSummary s;
  s.label = label;
  s.frames = static_cast<std::int64_t>(metrics.frames.size());

  std::vector<std::int64_t> delays;
  std::int64_t complete = 0, late = 0;
  double quality_sum = 0.0;
  for (const auto& f : metrics.frames) {
    quality_sum += f.quality;
    if (f.complete) ++complete;
    if (f.release_us) {
      delays.push_back(f.delay_us());
      if (f.delay_us() > config.delta_us) ++late;
    }
  }
  if (s.frames > 0) {
    s.complete_pct = 100.0 * complete / static_cast<double>(s.frames);
    s.mean_quality = quality_sum / static_cast<double>(s.frames);
  }
  if (!delays.empty()) {
    double sum = 0.0;
    for (auto d : delays) sum += static_cast<double>(d);
    s.mean_delay_us = sum / static_cast<double>(delays.size());
    s.late_pct = 100.0 * late / static_cast<double>(delays.size());
    s.p5_delay_us = percentile_nearest_rank(delays, 5);
    s.p25_delay_us = percentile_nearest_rank(delays, 25);
    s.p75_delay_us = percentile_nearest_rank(delays, 75);
    s.p95_delay_us = percentile_nearest_rank(delays, 95);
  }
  return s;
}

std::vector<RunSummary> compare_sessions(const std::vector<SessionConfig>& configs) {
  if (configs.size() < 2) {
    throw ConfigError("compare requires at least two configurations");
  }
  for (std::size_t i = 1; i < configs.size(); ++i) {
    if (configs[i].links.size() != configs[0].links.size()) {
      throw ConfigError("compared configurations must share the same links");
    }
    for (std::size_t l = 0; l < configs[i].links.size(); ++l) {
      if (configs[i].links[l].forward.source != configs[0].links[l].forward.source ||
          configs[i].links[l].reverse.source != configs[0].links[l].reverse.source) {
        throw ConfigError("compared configurations must share the same traces");
      }
    }
  }
  std::vector<RunSummary> rows;
  for (const auto& cfg : configs) {
    rows.push_back(summarize(cfg.name, run_session(cfg), cfg));
  }
  return rows;
}

std::string frames_csv(const SessionMetrics& metrics) {
  std::ostringstream out;
  out << "frame_no,capture_us,release_us,bytes,complete,delay_us\n";
  for (const auto& f : metrics.frames) {
    out << f.frame_no << ',' << f.capture_us << ',';
    if (f.release_us) {
      out << *f.release_us;
    } else {
      out << "DROP";
    }
    out << ',' << f.delivered_bytes << ',' << (f.complete ? 1 : 0) << ','
        << (f.release_us ? f.delay_us() : -1) << '\n';
  }
  return out.str();
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string summary_csv(const SessionMetrics& metrics, const SessionConfig& config) {
  const RunSummary s = summarize(config.name, metrics, config);

  std::vector<double> qualities;
  qualities.reserve(metrics.frames.size());
  for (const auto& f : metrics.frames) qualities.push_back(f.quality);

  std::ostringstream out;
  out << "metric,avg,p5,p25,p75,p95\n";
  out << "frame_delay_us," << format_double(s.mean_delay_us) << ','
      << s.p5_delay_us << ',' << s.p25_delay_us << ',' << s.p75_delay_us << ','
      << s.p95_delay_us << '\n';
  out << "quality," << format_double(s.mean_quality) << ','
      << format_double(percentile_nearest_rank(qualities, 5)) << ','
      << format_double(percentile_nearest_rank(qualities, 25)) << ','
      << format_double(percentile_nearest_rank(qualities, 75)) << ','
      << format_double(percentile_nearest_rank(qualities, 95)) << '\n';
  return out.str();
}

std::string compare_csv(const std::vector<RunSummary>& rows) {
  std::ostringstream out;
  out << "label,frames,complete_pct,late_pct,mean_delay_us,p5_delay_us,"
         "p25_delay_us,p75_delay_us,p95_delay_us,mean_quality\n";
  for (const auto& r : rows) {
    out << r.label << ',' << r.frames << ',' << format_double(r.complete_pct)
        << ',' << format_double(r.late_pct) << ','
        << format_double(r.mean_delay_us) << ',' << r.p5_delay_us << ','
        << r.p25_delay_us << ',' << r.p75_delay_us << ',' << r.p95_delay_us
        << ',' << format_double(r.mean_quality) << '\n';
  }
  return out.str();
}

}  // namespace mft
