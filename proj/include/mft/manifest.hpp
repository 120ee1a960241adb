#pragma once
#include <string>

#include "mft/session.hpp"

namespace mft {

// Experiment description loaded from a JSON config file; see README for the
// schema. Trace files are loaded eagerly so a bad manifest fails before any
// output is written.
struct RunManifest {
  std::string name;
  SessionConfig config;
  std::string output_dir;
};

RunManifest load_manifest(const std::string& path);

// Runs the session and writes frames.csv, summary.csv and run.json into the
// output directory. Identical manifest and seed produce byte-identical files.
SessionMetrics run_manifest(const RunManifest& manifest);

}  // namespace mft
