#pragma once

#include <string>

#include "spooftrace/train.hpp"

namespace spooftrace {

inline constexpr const char* kToolVersion = "spooftrace 0.1.0";

/// Everything needed to reproduce a run: training configuration (which
/// embeds the band layout, loss weights and seed) plus dataset and output
/// paths. Layered: defaults < config file < command-line flags.
struct RunConfig {
  TrainConfig train;
  std::string data_dir;
  std::string out_dir;

  std::string to_json() const;
  static RunConfig from_json(const std::string& text);
  static RunConfig from_file(const std::string& path);
  void save(const std::string& path) const;
};

/// Writes <out_dir>/run_manifest.json capturing config, seed and tool version.
void write_run_manifest(const RunConfig& cfg);

}  // namespace spooftrace
