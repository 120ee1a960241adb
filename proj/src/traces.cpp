#include "mft/traces.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mft {

OwdSeries load_owd_series(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw AnalysisError("cannot open owd series: " + path);
  OwdSeries series;
  std::string line;
  std::size_t line_no = 0;
  std::int64_t prev_ts = std::numeric_limits<std::int64_t>::min();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::int64_t ts, owd;
    if (!(ss >> ts >> owd)) {
      throw AnalysisError(path + ":" + std::to_string(line_no) + ": bad sample");
    }
    if (ts <= prev_ts) {
      throw AnalysisError(path + ":" + std::to_string(line_no) +
                          ": timestamps must be strictly increasing");
    }
    prev_ts = ts;
    series.samples.push_back({ts, owd});
  }
  return series;
}

void save_owd_series(const OwdSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out.is_open()) throw AnalysisError("cannot write owd series: " + path);
  for (const auto& s : series.samples) out << s.ts_us << ' ' << s.owd_us << '\n';
}

std::vector<std::optional<std::int64_t>> min_owd_bins(const OwdSeries& series) {
  if (series.samples.empty()) throw AnalysisError("empty owd series");
  const std::int64_t t0 = series.samples.front().ts_us;
  const std::int64_t span = series.samples.back().ts_us - t0;
  const std::size_t bin_count = static_cast<std::size_t>(span / kUsPerSec) + 1;
  std::vector<std::optional<std::int64_t>> bins(bin_count);
  for (const auto& s : series.samples) {
    const std::size_t b = static_cast<std::size_t>((s.ts_us - t0) / kUsPerSec);
    if (!bins[b] || s.owd_us < *bins[b]) bins[b] = s.owd_us;
  }
  return bins;
}

namespace {

struct Run {
  std::size_t start;
  std::size_t length;
  double mean_us;
};

// Exact minimum-SSE segmentation with a per-changepoint penalty derived from
// the first-difference noise estimate (BIC-style); exact recovery on
// noise-free steps.
std::vector<std::size_t> segment_changepoints(const std::vector<double>& v,
                                              double penalty) {
  const std::size_t n = v.size();
  std::vector<double> prefix(n + 1, 0.0), prefix_sq(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + v[i];
    prefix_sq[i + 1] = prefix_sq[i] + v[i] * v[i];
  }
  auto sse = [&](std::size_t a, std::size_t b) {  // [a, b)
    const double cnt = static_cast<double>(b - a);
    const double sum = prefix[b] - prefix[a];
    return (prefix_sq[b] - prefix_sq[a]) - sum * sum / cnt;
  };

  std::vector<double> best(n + 1, 0.0);
  std::vector<std::size_t> prev(n + 1, 0);
  for (std::size_t end = 1; end <= n; ++end) {
    best[end] = std::numeric_limits<double>::infinity();
    for (std::size_t start = 0; start < end; ++start) {
      const double cost =
          best[start] + sse(start, end) + (start > 0 ? penalty : 0.0);
      if (cost < best[end]) {
        best[end] = cost;
        prev[end] = start;
      }
    }
  }

  std::vector<std::size_t> starts;
  for (std::size_t at = n; at > 0; at = prev[at]) starts.push_back(prev[at]);
  std::reverse(starts.begin(), starts.end());
  return starts;  // first element is always 0
}

std::vector<Run> runs_from_starts(const std::vector<double>& v,
                                  const std::vector<std::size_t>& starts) {
  std::vector<Run> runs;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const std::size_t a = starts[i];
    const std::size_t b = i + 1 < starts.size() ? starts[i + 1] : v.size();
    double sum = 0.0;
    for (std::size_t j = a; j < b; ++j) sum += v[j];
    runs.push_back({a, b - a, sum / static_cast<double>(b - a)});
  }
  return runs;
}

// Adjacent runs whose means differ by less than the significance threshold
// are not real changes; merge the closest pair first and re-evaluate.
void merge_insignificant(std::vector<Run>& runs, double significance) {
  while (runs.size() > 1) {
    std::size_t best = 0;
    double best_diff = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
      const double diff = std::abs(runs[i].mean_us - runs[i + 1].mean_us);
      if (diff < best_diff) {
        best_diff = diff;
        best = i;
      }
    }
    if (best_diff >= significance) break;
    Run merged;
    merged.start = runs[best].start;
    merged.length = runs[best].length + runs[best + 1].length;
    merged.mean_us =
        (runs[best].mean_us * runs[best].length +
         runs[best + 1].mean_us * runs[best + 1].length) /
        static_cast<double>(merged.length);
    runs[best] = merged;
    runs.erase(runs.begin() + best + 1);
  }
}

}  // namespace

ChangePointReport detect_changes(
    const std::vector<std::optional<std::int64_t>>& bins,
    std::int64_t significance_us) {
  ChangePointReport report;

  std::size_t i = 0;
  const std::size_t n = bins.size();
  while (i < n) {
    while (i < n && !bins[i]) ++i;
    std::size_t j = i;
    while (j < n && bins[j]) ++j;
    if (i == j) break;

    std::vector<double> v;
    v.reserve(j - i);
    for (std::size_t k = i; k < j; ++k) v.push_back(static_cast<double>(*bins[k]));

    // Noise scale from first differences; zero for noise-free synthetics.
    double diff_var = 0.0;
    for (std::size_t k = 1; k < v.size(); ++k) {
      const double d = v[k] - v[k - 1];
      diff_var += d * d;
    }
    diff_var = v.size() > 1 ? diff_var / (2.0 * (v.size() - 1)) : 0.0;
    const double penalty =
        std::max(2.0 * diff_var * std::log(std::max<double>(v.size(), 2.0)), 1e-6);

    auto starts = segment_changepoints(v, penalty);
    auto runs = runs_from_starts(v, starts);
    merge_insignificant(runs, static_cast<double>(significance_us));

    for (std::size_t r = 0; r < runs.size(); ++r) {
      report.persistent_bin_lengths.push_back(runs[r].length);
      if (r > 0) report.change_bins.push_back(i + runs[r].start);
    }
    i = j;
  }
  return report;
}

CellNemTrace synth_trace(const SynthSpec& spec) {
  CellNemTrace trace;
  for (const auto& c : spec.cycles) {
    if (c.rate_mbps < 0.0) throw AnalysisError("negative rate in synth spec");
    if (c.pd_us < 0) throw AnalysisError("negative propagation delay in synth spec");
    CellNemCycle cycle;
    cycle.pd_us = c.pd_us;
    cycle.duration_us = spec.cycle_ms * kUsPerMs;
    if (c.rate_mbps > 0.0) {
      const double op_spacing_us =
          static_cast<double>(spec.mtu_bytes) * 8.0 / (c.rate_mbps * 1e6) * 1e6;
      for (std::int64_t k = 1;; ++k) {
        const std::int64_t at =
            static_cast<std::int64_t>(std::floor(k * op_spacing_us));
        if (at >= cycle.duration_us) break;
        cycle.ops_us.push_back((at / kUsPerMs) * kUsPerMs);
      }
    }
    trace.cycles.push_back(std::move(cycle));
  }
  return trace;
}

LinkTrace synth_link_trace(double rate_mbps, std::int64_t duration_ms, int mtu_bytes) {
  if (rate_mbps <= 0.0) throw AnalysisError("rate must be positive");
  LinkTrace trace;
  const double op_spacing_us =
      static_cast<double>(mtu_bytes) * 8.0 / (rate_mbps * 1e6) * 1e6;
  for (std::int64_t k = 1;; ++k) {
    const std::int64_t at = static_cast<std::int64_t>(std::floor(k * op_spacing_us));
    if (at > duration_ms * kUsPerMs) break;
    trace.ops_us.push_back((at / kUsPerMs) * kUsPerMs);
  }
  trace.duration_us = duration_ms * kUsPerMs;
  return trace;
}

}  // namespace mft
