#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mft/fidelity.hpp"
#include "mft/manifest.hpp"
#include "mft/traces.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTrace = 3;

struct SynthOptions {
  int cycles = 12;
  std::int64_t cycle_ms = 5000;
  double rate_mbps = 6.0;
  std::int64_t pd_us = 10000;
  std::string outage = "none";  // none | odd | even
  int mtu = mft::kDefaultMtuBytes;
  bool flat = false;
  std::int64_t duration_ms = 60000;
  std::string output;
};

int cmd_synth(const SynthOptions& opt) {
  if (opt.flat) {
    mft::save_link_trace(
        mft::synth_link_trace(opt.rate_mbps, opt.duration_ms, opt.mtu), opt.output);
    std::cout << "wrote " << opt.output << '\n';
    return kExitOk;
  }
  mft::SynthSpec spec;
  spec.cycle_ms = opt.cycle_ms;
  spec.mtu_bytes = opt.mtu;
  for (int k = 0; k < opt.cycles; ++k) {
    const bool dark = (opt.outage == "odd" && k % 2 == 1) ||
                      (opt.outage == "even" && k % 2 == 0);
    spec.cycles.push_back({dark ? 0.0 : opt.rate_mbps, opt.pd_us});
  }
  mft::save_cellnem_trace(mft::synth_trace(spec), opt.output);
  std::cout << "wrote " << opt.output << '\n';
  return kExitOk;
}

struct AnalyzeOptions {
  std::string input;
  std::string output;
  std::int64_t significance_us = 2000;
};

int cmd_analyze(const AnalyzeOptions& opt) {
  const mft::OwdSeries series = mft::load_owd_series(opt.input);
  const auto bins = mft::min_owd_bins(series);
  const auto report = mft::detect_changes(bins, opt.significance_us);

  std::ostringstream out;
  out << "bin,min_owd_us\n";
  for (std::size_t i = 0; i < bins.size(); ++i) {
    out << i << ',';
    if (bins[i]) {
      out << *bins[i];
    } else {
      out << "GAP";
    }
    out << '\n';
  }
  out << "change_bins";
  for (auto b : report.change_bins) out << ',' << b;
  out << "\nrun_lengths";
  for (auto r : report.persistent_bin_lengths) out << ',' << r;
  out << '\n';

  if (!opt.output.empty()) {
    std::ofstream f(opt.output, std::ios::binary);
    f << out.str();
  }
  std::cout << report.change_bins.size() << " change point(s)\n" << out.str();
  return kExitOk;
}

struct RecordOptions {
  std::string trace;
  std::string cellnem;
  std::int64_t pd_us = 10000;
  int cycles = 4;
  int cycle_s = mft::kDefaultCycleSeconds;
  std::int64_t probe_interval_ms = mft::kDefaultProbeIntervalMs;
  std::int64_t drain_timeout_ms = mft::kDefaultDrainTimeoutMs;
  int mtu = mft::kDefaultMtuBytes;
  std::string output;
};

int cmd_record(const RecordOptions& opt) {
  auto make_dir = [&]() {
    if (!opt.cellnem.empty()) {
      return mft::LinkDirection(mft::load_cellnem_trace(opt.cellnem));
    }
    return mft::LinkDirection(mft::load_link_trace(opt.trace), opt.pd_us);
  };
  mft::EmulatedLink link(make_dir(), make_dir());

  mft::RecordConfig cfg;
  cfg.cycles = opt.cycles;
  cfg.cycle_s = opt.cycle_s;
  cfg.probe_interval_ms = opt.probe_interval_ms;
  cfg.drain_timeout_ms = opt.drain_timeout_ms;
  cfg.mtu_bytes = opt.mtu;

  const mft::RecordResult result = mft::record_session(link, cfg);
  mft::save_cellnem_trace(result.trace, opt.output);
  for (std::size_t k = 0; k < result.trace.cycles.size(); ++k) {
    const auto& c = result.trace.cycles[k];
    std::cout << "cycle " << k << ": pd_us=" << c.pd_us
              << " ops=" << c.ops_us.size()
              << (c.drain_timeout ? " drain_timeout" : "") << '\n';
  }
  std::cout << "wrote " << opt.output << '\n';
  return kExitOk;
}

struct FidelityOptions {
  mft::FidelityConfig cfg;
  std::string output_dir = "out/fidelity";
};

int cmd_replay_fidelity(const FidelityOptions& opt) {
  namespace fs = std::filesystem;
  fs::create_directories(opt.output_dir);

  const std::int64_t step_at = opt.cfg.cycle_ms * mft::kUsPerMs;
  const std::int64_t step = opt.cfg.pd1_us - opt.cfg.pd0_us;

  bool ok = true;
  for (auto mode : {mft::ReplayMode::kCycleDelay, mft::ReplayMode::kFoldedDelay}) {
    for (auto pattern : {mft::SenderPattern::kBulk, mft::SenderPattern::kOnOff}) {
      const auto points = mft::run_fidelity(opt.cfg, mode, pattern);
      const auto check = mft::evaluate_fidelity(points, step_at, step);

      const std::string mode_name =
          mode == mft::ReplayMode::kCycleDelay ? "cycle" : "folded";
      const std::string pattern_name =
          pattern == mft::SenderPattern::kBulk ? "bulk" : "onoff";
      const std::string path =
          opt.output_dir + "/owd_" + mode_name + "_" + pattern_name + ".csv";
      std::ofstream f(path, std::ios::binary);
      f << "send_us,owd_us\n";
      for (const auto& p : points) f << p.send_us << ',' << p.owd_us << '\n';

      std::cout << mode_name << '/' << pattern_name << ": post-step packets "
                << check.post_elevated << '/' << check.post_count
                << " elevated, floor shift " << check.floor_shift_us << " us\n";
      if (mode == mft::ReplayMode::kCycleDelay &&
          check.post_elevated != check.post_count) {
        ok = false;  // per-cycle replay must show the full step on every packet
      }
    }
  }
  std::cout << (ok ? "replay fidelity OK" : "replay fidelity FAILED") << '\n';
  return ok ? kExitOk : 1;
}

int cmd_run(const std::string& manifest_path, const std::string& output_dir) {
  mft::RunManifest manifest = mft::load_manifest(manifest_path);
  if (!output_dir.empty()) manifest.output_dir = output_dir;
  const mft::SessionMetrics metrics = mft::run_manifest(manifest);
  const mft::RunSummary s =
      mft::summarize(manifest.name, metrics, manifest.config);
  std::cout << manifest.name << ": " << s.frames << " frames, "
            << s.complete_pct << "% complete, p95 delay " << s.p95_delay_us
            << " us -> " << manifest.output_dir << '\n';
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& manifest_paths,
                const std::string& output) {
  std::vector<mft::SessionConfig> configs;
  std::vector<std::string> names;
  for (const auto& path : manifest_paths) {
    auto m = mft::load_manifest(path);
    names.push_back(m.name);
    configs.push_back(std::move(m.config));
  }
  const auto rows = mft::compare_sessions(configs);
  const std::string csv = mft::compare_csv(rows);
  if (!output.empty()) {
    std::ofstream f(output, std::ios::binary);
    f << csv;
  }
  std::cout << csv;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multipath frame transport: trace-driven sessions and emulation"};
  app.require_subcommand(1);

  // run
  std::string run_manifest_path, run_output_dir;
  auto* run = app.add_subcommand("run", "run a session from a manifest");
  run->add_option("manifest", run_manifest_path, "manifest JSON file")->required();
  run->add_option("--output-dir", run_output_dir, "override the manifest output_dir");

  // compare
  std::vector<std::string> compare_paths;
  std::string compare_output;
  auto* compare = app.add_subcommand("compare", "run and compare >= 2 manifests");
  compare->add_option("manifests", compare_paths, "manifest JSON files")
      ->expected(2, -1)
      ->required();
  compare->add_option("-o,--output", compare_output, "comparison CSV path");

  // synth
  SynthOptions synth_opt;
  auto* synth = app.add_subcommand("synth", "generate a synthetic trace");
  synth->add_option("--cycles", synth_opt.cycles, "number of cycles");
  synth->add_option("--cycle-ms", synth_opt.cycle_ms, "cycle duration, ms");
  synth->add_option("--rate-mbps", synth_opt.rate_mbps, "link rate, Mbps");
  synth->add_option("--pd-us", synth_opt.pd_us, "propagation delay, us");
  synth->add_option("--outage", synth_opt.outage, "outage cycles: none|odd|even")
      ->check(CLI::IsMember({"none", "odd", "even"}));
  synth->add_option("--mtu", synth_opt.mtu, "mtu bytes");
  synth->add_flag("--flat", synth_opt.flat, "plain delivery-opportunity trace");
  synth->add_option("--duration-ms", synth_opt.duration_ms, "flat trace duration");
  synth->add_option("-o,--output", synth_opt.output, "output path")->required();

  // analyze
  AnalyzeOptions analyze_opt;
  auto* analyze = app.add_subcommand("analyze", "min-OWD bins and change points");
  analyze->add_option("input", analyze_opt.input, "owd series file")->required();
  analyze->add_option("-o,--output", analyze_opt.output, "report CSV path");
  analyze->add_option("--significance-us", analyze_opt.significance_us,
                      "change significance threshold, us");

  // record
  RecordOptions record_opt;
  auto* record = app.add_subcommand("record", "two-phase record through an emulated link");
  record->add_option("--trace", record_opt.trace, "flat trace for the link under test");
  record->add_option("--cellnem", record_opt.cellnem, "cycle trace for the link under test");
  record->add_option("--pd-us", record_opt.pd_us, "flat-trace propagation delay, us");
  record->add_option("--cycles", record_opt.cycles, "record cycles");
  record->add_option("--cycle-s", record_opt.cycle_s, "seconds per phase");
  record->add_option("--probe-interval-ms", record_opt.probe_interval_ms,
                     "delay-probe spacing, ms");
  record->add_option("--drain-timeout-ms", record_opt.drain_timeout_ms,
                     "drainage timeout, ms");
  record->add_option("--mtu", record_opt.mtu, "mtu bytes");
  record->add_option("-o,--output", record_opt.output, "output trace path")->required();

  // replay-fidelity
  FidelityOptions fid_opt;
  auto* fid = app.add_subcommand("replay-fidelity",
                                 "propagation-delay step replay experiment");
  fid->add_option("--rate-mbps", fid_opt.cfg.rate_mbps, "link rate, Mbps");
  fid->add_option("--pd0-us", fid_opt.cfg.pd0_us, "pre-step one-way delay, us");
  fid->add_option("--pd1-us", fid_opt.cfg.pd1_us, "post-step one-way delay, us");
  fid->add_option("--cycle-ms", fid_opt.cfg.cycle_ms, "cycle duration, ms");
  fid->add_option("--output-dir", fid_opt.output_dir, "per-packet OWD CSV directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(run_manifest_path, run_output_dir);
    if (compare->parsed()) return cmd_compare(compare_paths, compare_output);
    if (synth->parsed()) return cmd_synth(synth_opt);
    if (analyze->parsed()) return cmd_analyze(analyze_opt);
    if (record->parsed()) return cmd_record(record_opt);
    if (fid->parsed()) return cmd_replay_fidelity(fid_opt);
  } catch (const mft::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mft::TraceError& e) {
    std::cerr << "trace error: " << e.what() << '\n';
    return kExitTrace;
  } catch (const mft::AnalysisError& e) {
    std::cerr << "trace error: " << e.what() << '\n';
    return kExitTrace;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
