#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "manifest.hpp"

namespace dualcache::cli {

struct CommandOptions {
  std::optional<std::filesystem::path> out;  // overrides manifest output_dir
  std::size_t threads = 1;
  std::optional<AdapterMode> mode;  // overrides adapter.mode and the eval mode list
  std::ostream* log = nullptr;      // warnings and progress; null = silent
};

// Applies --out / --mode to a parsed manifest.
RunManifest applyOverrides(RunManifest manifest, const CommandOptions& options);

// Every command returns the files it wrote, in write order.
using Outputs = std::vector<std::filesystem::path>;

Outputs cmdValidate(const RunManifest& manifest, const CommandOptions& options, std::ostream& out);
Outputs cmdSelectChannels(const RunManifest& manifest, const CommandOptions& options);
Outputs cmdBuildCache(const RunManifest& manifest, const CommandOptions& options);
Outputs cmdScore(const RunManifest& manifest, const CommandOptions& options);
Outputs cmdEval(const RunManifest& manifest, const CommandOptions& options);
Outputs cmdSweep(const RunManifest& manifest, const CommandOptions& options);

}  // namespace dualcache::cli
