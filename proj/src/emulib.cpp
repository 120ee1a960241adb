#include "mft/emulib.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

namespace mft {

std::int64_t CellNemTrace::total_duration_us() const {
  std::int64_t d = 0;
  for (const auto& c : cycles) d += c.duration_us;
  return d;
}

// ---- trace files ----

LinkTrace load_link_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw TraceError("cannot open trace file: " + path);
  LinkTrace trace;
  std::string line;
  std::int64_t prev = -1;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::int64_t ms;
    try {
      ms = std::stoll(line);
    } catch (const std::exception&) {
      throw TraceError(path + ":" + std::to_string(line_no) + ": not a timestamp");
    }
    if (ms < prev) {
      throw TraceError(path + ":" + std::to_string(line_no) +
                       ": non-monotonic timestamp");
    }
    prev = ms;
    trace.ops_us.push_back(ms * kUsPerMs);
  }
  if (trace.ops_us.empty()) throw TraceError(path + ": empty trace");
  trace.duration_us = std::max<std::int64_t>(trace.ops_us.back(), kUsPerMs);
  return trace;
}

void save_link_trace(const LinkTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out.is_open()) throw TraceError("cannot write trace file: " + path);
  for (std::int64_t op : trace.ops_us) out << op / kUsPerMs << '\n';
}

CellNemTrace load_cellnem_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw TraceError("cannot open trace file: " + path);
  CellNemTrace trace;
  std::string line;
  std::size_t line_no = 0;
  std::int64_t prev = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("CYCLE", 0) == 0) {
      std::istringstream ss(line);
      std::string cycle_kw, pd_kw, dur_kw;
      std::int64_t idx, pd, dur;
      if (!(ss >> cycle_kw >> idx >> pd_kw >> pd >> dur_kw >> dur) ||
          pd_kw != "PD_US" || dur_kw != "DUR_MS" || pd < 0 || dur <= 0) {
        throw TraceError(path + ":" + std::to_string(line_no) + ": bad CYCLE header");
      }
      if (idx != static_cast<std::int64_t>(trace.cycles.size())) {
        throw TraceError(path + ":" + std::to_string(line_no) +
                         ": cycle index out of order");
      }
      CellNemCycle cycle;
      cycle.pd_us = pd;
      cycle.duration_us = dur * kUsPerMs;
      trace.cycles.push_back(std::move(cycle));
      prev = -1;
      continue;
    }
    if (trace.cycles.empty()) {
      throw TraceError(path + ":" + std::to_string(line_no) +
                       ": timestamp before first CYCLE header");
    }
    std::int64_t ms;
    try {
      ms = std::stoll(line);
    } catch (const std::exception&) {
      throw TraceError(path + ":" + std::to_string(line_no) + ": not a timestamp");
    }
    auto& cycle = trace.cycles.back();
    if (ms < prev || ms * kUsPerMs > cycle.duration_us || ms < 0) {
      throw TraceError(path + ":" + std::to_string(line_no) +
                       ": timestamp outside cycle or non-monotonic");
    }
    prev = ms;
    cycle.ops_us.push_back(ms * kUsPerMs);
  }
  if (trace.cycles.empty()) throw TraceError(path + ": no cycles");
  return trace;
}

void save_cellnem_trace(const CellNemTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out.is_open()) throw TraceError("cannot write trace file: " + path);
  for (std::size_t i = 0; i < trace.cycles.size(); ++i) {
    const auto& c = trace.cycles[i];
    out << "CYCLE " << i << " PD_US " << c.pd_us << " DUR_MS "
        << c.duration_us / kUsPerMs << '\n';
    for (std::int64_t op : c.ops_us) out << op / kUsPerMs << '\n';
  }
}

// ---- event loop ----

void EventLoop::schedule(std::int64_t at_us, std::function<void()> fn) {
  heap_.push(Entry{std::max(at_us, now_us_), next_seq_++, std::move(fn)});
}

void EventLoop::run_until(std::int64_t end_us) {
  while (!heap_.empty() && heap_.top().at_us <= end_us) {
    Entry e = heap_.top();
    heap_.pop();
    now_us_ = e.at_us;
    e.fn();
  }
  now_us_ = std::max(now_us_, end_us);
}

void EventLoop::run_realtime(std::int64_t end_us) {
  const auto start = std::chrono::steady_clock::now();
  while (!heap_.empty() && heap_.top().at_us <= end_us) {
    Entry e = heap_.top();
    heap_.pop();
    std::this_thread::sleep_until(start + std::chrono::microseconds(e.at_us));
    now_us_ = e.at_us;
    e.fn();
  }
  now_us_ = std::max(now_us_, end_us);
}

// ---- emulated link ----

LinkDirection::LinkDirection(LinkTrace trace, std::int64_t pd_us)
    : ops_us_(std::move(trace.ops_us)),
      duration_us_(trace.duration_us),
      const_pd_us_(pd_us) {
  if (ops_us_.empty()) throw TraceError("link trace has no delivery opportunities");
  if (duration_us_ <= 0) throw TraceError("link trace duration must be positive");
  if (pd_us < 0) throw TraceError("propagation delay must be non-negative");
}

LinkDirection::LinkDirection(CellNemTrace trace) {
  std::int64_t start = 0;
  for (const auto& c : trace.cycles) {
    for (std::int64_t op : c.ops_us) ops_us_.push_back(start + op);
    start += c.duration_us;
    cycle_ends_us_.push_back(start);
    cycle_pd_us_.push_back(c.pd_us);
  }
  duration_us_ = start;
  if (ops_us_.empty()) {
    throw TraceError("cellnem trace has no delivery opportunities in any cycle");
  }
  if (duration_us_ <= 0) throw TraceError("cellnem trace duration must be positive");
}

std::int64_t LinkDirection::pd_at(std::int64_t t_us) const {
  if (cycle_ends_us_.empty()) return const_pd_us_;
  const std::int64_t rel = t_us % duration_us_;
  auto it = std::upper_bound(cycle_ends_us_.begin(), cycle_ends_us_.end(), rel);
  const std::size_t idx = static_cast<std::size_t>(it - cycle_ends_us_.begin());
  return cycle_pd_us_[std::min(idx, cycle_pd_us_.size() - 1)];
}

std::int64_t LinkDirection::op_time(std::int64_t abs_index) const {
  const std::int64_t n = static_cast<std::int64_t>(ops_us_.size());
  return (abs_index / n) * duration_us_ + ops_us_[abs_index % n];
}

std::int64_t LinkDirection::first_op_at_or_after(std::int64_t t_us) const {
  const std::int64_t n = static_cast<std::int64_t>(ops_us_.size());
  if (t_us <= ops_us_.front()) return 0;
  const std::int64_t loop = t_us / duration_us_;
  const std::int64_t rel = t_us - loop * duration_us_;
  const auto it = std::lower_bound(ops_us_.begin(), ops_us_.end(), rel);
  if (it == ops_us_.end()) {
    // next loop's first opportunity
    return (loop + 1) * n;
  }
  return loop * n + (it - ops_us_.begin());
}

std::int64_t LinkDirection::send(const EmuPacket& pkt, std::int64_t now_us) {
  if (pkt.size_bytes > mtu_bytes) {
    throw TraceError("packet larger than link mtu");
  }
  const std::int64_t eligible = now_us + pd_at(now_us);
  const std::int64_t index =
      std::max(next_op_index_, first_op_at_or_after(eligible));
  next_op_index_ = index + 1;
  const std::int64_t at = op_time(index);
  pending_.push_back(Delivery{at, pkt});
  return at;
}

std::vector<LinkDirection::Delivery> LinkDirection::take_delivered(
    std::int64_t until_us) {
  std::vector<Delivery> out;
  while (!pending_.empty() && pending_.front().at_us <= until_us) {
    out.push_back(std::move(pending_.front()));
    pending_.pop_front();
  }
  return out;
}

std::vector<EmulatedLink::Delivery> EmulatedLink::step(std::int64_t until_us) {
  auto fwd = dirs_[0].take_delivered(until_us);
  auto rev = dirs_[1].take_delivered(until_us);
  std::vector<Delivery> merged;
  merged.reserve(fwd.size() + rev.size());
  std::size_t i = 0, j = 0;
  while (i < fwd.size() || j < rev.size()) {
    const bool take_fwd =
        j >= rev.size() || (i < fwd.size() && fwd[i].at_us <= rev[j].at_us);
    if (take_fwd) {
      merged.push_back(Delivery{Direction::kForward, fwd[i].at_us, std::move(fwd[i].pkt)});
      ++i;
    } else {
      merged.push_back(Delivery{Direction::kReverse, rev[j].at_us, std::move(rev[j].pkt)});
      ++j;
    }
  }
  return merged;
}

// ---- two-phase record ----

namespace {

struct RecorderState {
  enum class Phase { kSaturation, kDrain, kProbe };
  Phase phase = Phase::kSaturation;
  int cycle = 0;
  std::uint64_t next_data_id = 1;
  std::uint64_t last_sat_id = 0;
  std::uint64_t probe_id = 1ull << 62;
  std::map<std::uint64_t, std::int64_t> probe_send_ts;
};

}  // namespace

RecordResult record_session(EmulatedLink& link, const RecordConfig& cfg) {
  EventLoop loop;
  RecordResult result;
  result.trace.cycles.resize(cfg.cycles);
  result.cycle_stats.resize(cfg.cycles);

  const std::int64_t phase_us = static_cast<std::int64_t>(cfg.cycle_s) * kUsPerSec;
  const std::int64_t cycle_us = 2 * phase_us;
  RecorderState st;

  for (int k = 0; k < cfg.cycles; ++k) {
    result.trace.cycles[k].duration_us = phase_us;
    result.trace.cycles[k].pd_us = 0;
    result.trace.cycles[k].pd_measured = false;
  }

  auto cycle_start = [&](int k) { return static_cast<std::int64_t>(k) * cycle_us; };
  auto sat_end = [&](int k) { return cycle_start(k) + phase_us; };
  auto cycle_end = [&](int k) { return cycle_start(k) + 2 * phase_us; };

  // Deliveries are processed by draining the link at each known arrival time.
  std::function<void()> pump;

  auto send_data = [&](std::int64_t now) {
    EmuPacket pkt;
    pkt.size_bytes = cfg.mtu_bytes;
    pkt.id = st.next_data_id++;
    const std::int64_t at = link.send(Direction::kForward, pkt, now);
    loop.schedule(at, pump);
  };

  auto send_probe = [&](std::int64_t now) {
    EmuPacket pkt;
    pkt.size_bytes = cfg.probe_bytes;
    pkt.id = st.probe_id++;
    st.probe_send_ts[pkt.id] = now;
    const std::int64_t at = link.send(Direction::kForward, pkt, now);
    loop.schedule(at, pump);
  };

  std::function<void(std::int64_t)> begin_probe_phase;
  std::function<void(std::int64_t)> begin_cycle;

  auto probe_tick = [&](auto&& self, int cycle, std::int64_t now) -> void {
    if (now >= cycle_end(cycle) || cycle != st.cycle) return;
    send_probe(now);
    const std::int64_t next = now + cfg.probe_interval_ms * kUsPerMs;
    if (next < cycle_end(cycle)) {
      loop.schedule(next, [&, self, cycle, next]() { self(self, cycle, next); });
    }
  };

  begin_probe_phase = [&](std::int64_t now) {
    if (st.phase == RecorderState::Phase::kProbe) return;
    st.phase = RecorderState::Phase::kProbe;
    probe_tick(probe_tick, st.cycle, now);
  };

  begin_cycle = [&](std::int64_t now) {
    st.phase = RecorderState::Phase::kSaturation;
    st.last_sat_id = 0;
    const int k = st.cycle;
    for (int i = 0; i < cfg.window; ++i) send_data(now);

    // Saturation ends on schedule; drainage then waits for the last ACK or
    // the timeout, whichever comes first.
    loop.schedule(sat_end(k), [&, k]() {
      if (st.cycle != k) return;
      st.phase = RecorderState::Phase::kDrain;
      st.last_sat_id = st.next_data_id - 1;
      const std::int64_t deadline =
          loop.now_us() + cfg.drain_timeout_ms * kUsPerMs;
      loop.schedule(std::min(deadline, cycle_end(k) - 1), [&, k]() {
        if (st.cycle == k && st.phase == RecorderState::Phase::kDrain) {
          result.cycle_stats[k].drain_timeout = true;
          result.trace.cycles[k].drain_timeout = true;
          begin_probe_phase(loop.now_us());
        }
      });
    });

    loop.schedule(cycle_end(k), [&, k]() {
      if (st.cycle != k) return;
      ++st.cycle;
      if (st.cycle < cfg.cycles) begin_cycle(loop.now_us());
    });
  };

  pump = [&]() {
    const std::int64_t now = loop.now_us();
    for (auto& d : link.step(now)) {
      if (d.dir == Direction::kForward) {
        // Far-end agent: log saturation arrivals, echo an ACK, score probes.
        if (d.pkt.id >= (1ull << 62)) {
          auto it = st.probe_send_ts.find(d.pkt.id);
          if (it != st.probe_send_ts.end()) {
            const std::int64_t owd = now - it->second;
            const int cycle =
                static_cast<int>(std::min<std::int64_t>(it->second / cycle_us,
                                                        cfg.cycles - 1));
            // A probe outliving its cycle measures nothing: the cycle closed.
            if (now < cycle_end(cycle)) {
              auto& c = result.trace.cycles[cycle];
              if (!c.pd_measured || owd < c.pd_us) {
                c.pd_us = owd;
                c.pd_measured = true;
              }
              ++result.cycle_stats[cycle].owd_samples;
            }
            st.probe_send_ts.erase(it);
          }
        } else {
          const int cycle = static_cast<int>(
              std::min<std::int64_t>(now / cycle_us, cfg.cycles - 1));
          const std::int64_t rel = now - cycle_start(cycle);
          if (rel >= 0 && rel < phase_us) {
            auto& c = result.trace.cycles[cycle];
            c.ops_us.push_back((rel / kUsPerMs) * kUsPerMs);
            ++result.cycle_stats[cycle].op_count;
          }
          EmuPacket ack;
          ack.size_bytes = cfg.probe_bytes;
          ack.id = d.pkt.id;
          const std::int64_t at = link.send(Direction::kReverse, ack, now);
          loop.schedule(at, pump);
        }
      } else {
        // Recorder side: ACK clocking during saturation, drain detection.
        if (st.phase == RecorderState::Phase::kSaturation &&
            now < sat_end(st.cycle)) {
          send_data(now);
        } else if (st.phase == RecorderState::Phase::kDrain &&
                   d.pkt.id >= st.last_sat_id) {
          begin_probe_phase(now);
        }
      }
    }
  };

  begin_cycle(0);
  loop.run_until(static_cast<std::int64_t>(cfg.cycles) * cycle_us + kUsPerSec);

  // An unmeasurable cycle inherits the previous cycle's delay.
  std::int64_t last_pd = 0;
  for (auto& c : result.trace.cycles) {
    if (c.pd_measured) {
      last_pd = c.pd_us;
    } else {
      c.pd_us = last_pd;
    }
  }
  return result;
}

}  // namespace mft
