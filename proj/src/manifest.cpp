#include "mft/manifest.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace mft {
namespace {

using nlohmann::json;

DirectionSpec load_direction(const json& link, const char* cell_key,
                             const char* flat_key) {
  DirectionSpec spec;
  if (link.contains(cell_key)) {
    spec.kind = DirectionSpec::Kind::kCellNem;
    spec.source = link.at(cell_key).get<std::string>();
    spec.cellnem = load_cellnem_trace(spec.source);
  } else if (link.contains(flat_key)) {
    spec.kind = DirectionSpec::Kind::kFlat;
    spec.source = link.at(flat_key).get<std::string>();
    spec.flat = load_link_trace(spec.source);
    spec.pd_us = link.value("pd_us", std::int64_t{0});
  } else {
    throw ConfigError(std::string("link needs \"") + cell_key + "\" or \"" +
                      flat_key + "\"");
  }
  return spec;
}

LinkSetup load_link(const json& link) {
  LinkSetup setup;
  if (link.contains("cellnem") || link.contains("trace")) {
    setup.forward = load_direction(link, "cellnem", "trace");
    setup.reverse = setup.forward;
  } else {
    setup.forward = load_direction(link, "cellnem_fwd", "trace_fwd");
    setup.reverse = load_direction(link, "cellnem_rev", "trace_rev");
  }
  return setup;
}

}  // namespace

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw ConfigError("cannot open manifest: " + path);

  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("manifest parse error: " + std::string(e.what()));
  }

  RunManifest manifest;
  try {
    manifest.name = doc.value("name", std::string("session"));
    manifest.output_dir = doc.value("output_dir", std::string("out/") + manifest.name);

    SessionConfig& cfg = manifest.config;
    cfg.name = manifest.name;
    cfg.duration_s = doc.value("duration_s", cfg.duration_s);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.fps = doc.value("fps", cfg.fps);
    cfg.mtu_bytes = doc.value("mtu", cfg.mtu_bytes);
    cfg.delta_us = doc.value("delta_us", cfg.delta_us);
    cfg.omega_us = doc.value("omega_us", cfg.omega_us);
    cfg.ewma_alpha = doc.value("ewma_alpha", cfg.ewma_alpha);
    cfg.min_frame_bytes = doc.value("min_frame_bytes", cfg.min_frame_bytes);
    cfg.max_frame_bytes = doc.value("max_frame_bytes", cfg.max_frame_bytes);

    const std::string mode = doc.value("mode", std::string("multipath"));
    if (mode == "multipath") {
      cfg.mode = SessionConfig::Mode::kMultipath;
    } else if (mode.rfind("single:", 0) == 0) {
      cfg.mode = SessionConfig::Mode::kSinglePath;
      cfg.single_path_link = std::stoi(mode.substr(7));
    } else {
      throw ConfigError("mode must be \"multipath\" or \"single:<link>\"");
    }

    const std::string clock = doc.value("clock", std::string("virtual"));
    if (clock == "virtual") {
      cfg.clock = SessionConfig::Clock::kVirtual;
    } else if (clock == "realtime") {
      cfg.clock = SessionConfig::Clock::kRealtime;
    } else {
      throw ConfigError("clock must be \"virtual\" or \"realtime\"");
    }

    if (!doc.contains("links") || !doc["links"].is_array()) {
      throw ConfigError("manifest needs a \"links\" array");
    }
    for (const auto& link : doc["links"]) cfg.links.push_back(load_link(link));

    if (doc.contains("subflows")) {
      for (const auto& s : doc["subflows"]) cfg.subflow_links.push_back(s.get<int>());
    }
  } catch (const json::exception& e) {
    throw ConfigError("bad manifest field: " + std::string(e.what()));
  }

  manifest.config.validate();
  return manifest;
}

SessionMetrics run_manifest(const RunManifest& manifest) {
  SessionMetrics metrics = run_session(manifest.config);

  std::filesystem::create_directories(manifest.output_dir);
  const auto dir = std::filesystem::path(manifest.output_dir);

  {
    std::ofstream out(dir / "frames.csv", std::ios::binary);
    out << frames_csv(metrics);
  }
  {
    std::ofstream out(dir / "summary.csv", std::ios::binary);
    out << summary_csv(metrics, manifest.config);
  }
  {
    const RunSummary s = summarize(manifest.name, metrics, manifest.config);
    json log;
    log["name"] = manifest.name;
    log["frames"] = s.frames;
    log["complete_pct"] = s.complete_pct;
    log["late_pct"] = s.late_pct;
    log["mean_delay_us"] = s.mean_delay_us;
    log["p95_delay_us"] = s.p95_delay_us;
    log["mean_quality"] = s.mean_quality;
    log["packets_sent"] = metrics.packets_sent;
    log["probes_sent"] = metrics.probes_sent;
    log["acks_received"] = metrics.acks_received;
    log["cwnd_violations"] = metrics.cwnd_violations;
    log["recovery_entries"] = metrics.recovery_entries;
    log["ordering_ok"] = metrics.ordering_ok;
    std::ofstream out(dir / "run.json", std::ios::binary);
    out << log.dump(2) << '\n';
  }
  return metrics;
}

}  // namespace mft
