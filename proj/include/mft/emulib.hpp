#pragma once
#include <cstdint>
#include <deque>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "mft/defaults.hpp"

namespace mft {

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Delivery-opportunity timeline for one link direction, constant propagation
// delay. File format: one integer millisecond timestamp per line.
struct LinkTrace {
  std::vector<std::int64_t> ops_us;  // non-decreasing, relative to trace start
  std::int64_t duration_us = 0;      // >= last op; the loop period
};

// One record cycle: minimum propagation delay plus the delivery opportunities
// captured in the saturation phase, relative to cycle start.
struct CellNemCycle {
  std::int64_t pd_us = 0;
  std::int64_t duration_us = 0;
  std::vector<std::int64_t> ops_us;
  bool drain_timeout = false;  // record-phase artifact, not persisted
  bool pd_measured = true;     // false when no probe survived the cycle
};

struct CellNemTrace {
  std::vector<CellNemCycle> cycles;
  std::int64_t total_duration_us() const;
};

LinkTrace load_link_trace(const std::string& path);
void save_link_trace(const LinkTrace& trace, const std::string& path);
CellNemTrace load_cellnem_trace(const std::string& path);
void save_cellnem_trace(const CellNemTrace& trace, const std::string& path);

// Deterministic discrete-event engine driving everything that runs under a
// virtual clock. Events at equal times dispatch in scheduling order.
class EventLoop {
 public:
  void schedule(std::int64_t at_us, std::function<void()> fn);
  void run_until(std::int64_t end_us);   // dispatches every event with t <= end
  void run_realtime(std::int64_t end_us);  // same schedule, paced by wall clock
  std::int64_t now_us() const { return now_us_; }
  bool empty() const { return heap_.empty(); }

 private:
  struct Entry {
    std::int64_t at_us;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.at_us != b.at_us) return a.at_us > b.at_us;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::uint64_t next_seq_ = 0;
  std::int64_t now_us_ = 0;
};

struct EmuPacket {
  int size_bytes = 0;
  std::uint64_t id = 0;
  std::vector<std::uint8_t> bytes;  // opaque; empty for plumbing packets
};

enum class Direction { kForward = 0, kReverse = 1 };

// One direction of an emulated link: each packet becomes queue-eligible after
// the propagation delay of the cycle it was sent in, then occupies the
// earliest unconsumed delivery opportunity at or after that instant. One
// packet per opportunity, FIFO, unused opportunities are wasted, the trace
// loops when the experiment outlasts it.
class LinkDirection {
 public:
  LinkDirection(LinkTrace trace, std::int64_t pd_us);
  explicit LinkDirection(CellNemTrace trace);

  // Returns the delivery timestamp (computable at send time: order is FIFO).
  std::int64_t send(const EmuPacket& pkt, std::int64_t now_us);

  struct Delivery {
    std::int64_t at_us;
    EmuPacket pkt;
  };
  std::vector<Delivery> take_delivered(std::int64_t until_us);

  std::int64_t pd_at(std::int64_t t_us) const;
  int mtu_bytes = kDefaultMtuBytes;

 private:
  std::int64_t op_time(std::int64_t abs_index) const;
  std::int64_t first_op_at_or_after(std::int64_t t_us) const;

  std::vector<std::int64_t> ops_us_;      // flattened, relative to trace start
  std::int64_t duration_us_ = 0;
  std::int64_t const_pd_us_ = 0;
  std::vector<std::int64_t> cycle_ends_us_;  // empty for constant-pd traces
  std::vector<std::int64_t> cycle_pd_us_;
  std::int64_t next_op_index_ = 0;
  std::deque<Delivery> pending_;
};

class EmulatedLink {
 public:
  EmulatedLink(LinkDirection forward, LinkDirection reverse)
      : dirs_{std::move(forward), std::move(reverse)} {}

  std::int64_t send(Direction dir, const EmuPacket& pkt, std::int64_t now_us) {
    return dir_(dir).send(pkt, now_us);
  }

  struct Delivery {
    Direction dir;
    std::int64_t at_us;
    EmuPacket pkt;
  };
  // All deliveries with timestamp <= until, in timestamp order; deterministic
  // and idempotent for a repeated `until`.
  std::vector<Delivery> step(std::int64_t until_us);

  LinkDirection& dir(Direction d) { return dir_(d); }

 private:
  LinkDirection& dir_(Direction d) { return dirs_[static_cast<int>(d)]; }
  LinkDirection dirs_[2];
};

// Two-phase record driven through an emulated link with an in-process far-end
// echo agent: saturate for cycle_s seconds logging arrival times, wait for
// the queue to drain (last-ACK or timeout), then probe the propagation delay
// until the cycle closes. Each full cycle spans 2 * cycle_s of record time
// and produces one replay cycle of cycle_s.
struct RecordConfig {
  int cycles = 4;
  int cycle_s = kDefaultCycleSeconds;
  std::int64_t probe_interval_ms = kDefaultProbeIntervalMs;
  int probe_bytes = kDefaultProbeBytes;
  std::int64_t drain_timeout_ms = kDefaultDrainTimeoutMs;
  int mtu_bytes = kDefaultMtuBytes;
  int window = 64;  // saturation packets kept in flight (ACK-clocked)
};

struct RecordCycleStats {
  bool drain_timeout = false;
  int owd_samples = 0;
  int op_count = 0;
};

struct RecordResult {
  CellNemTrace trace;
  std::vector<RecordCycleStats> cycle_stats;
};

RecordResult record_session(EmulatedLink& link, const RecordConfig& cfg);

}  // namespace mft
