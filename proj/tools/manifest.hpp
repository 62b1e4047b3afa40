#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dualcache/adapter.hpp"
#include "dualcache/channel_selector.hpp"
#include "dualcache/embedding_store.hpp"
#include "dualcache/eval.hpp"

namespace dualcache::cli {

struct OodPath {
  std::string name;
  std::filesystem::path embeddings;
};

// Declarative description of one experiment. Relative paths in the JSON file
// are resolved against the manifest's directory.
struct RunManifest {
  std::filesystem::path source;

  std::filesystem::path idTrainEmbeddings;
  std::filesystem::path idTrainLabels;
  std::filesystem::path idTestEmbeddings;
  std::filesystem::path idTestLabels;
  std::vector<OodPath> oodTest;
  std::filesystem::path vocabulary;

  std::filesystem::path textDir;
  std::string textDataset;
  std::filesystem::path positiveTemplates;
  std::filesystem::path negativeTemplates;

  std::optional<std::filesystem::path> partition;  // precomputed partition file

  std::size_t shots = 16;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool normalize = true;
  bool dumpLogits = false;

  SelectorConfig selector;
  AdapterConfig adapter;
  std::vector<AdapterMode> modes;  // eval rows; defaults to {adapter.mode}

  SweepGrid grid;
  Objective objective = Objective::Auroc;
  TuningSet tuningSet = TuningSet::ValidationSplit;

  std::filesystem::path outputDir;
  std::vector<std::string> warnings;
};

RunManifest parseManifest(const std::filesystem::path& path);
RunManifest parseManifestText(const std::string& json, const std::filesystem::path& baseDir);

// Throws IoError naming the first referenced file that does not exist.
void checkFilesExist(const RunManifest& manifest);

DatasetBundle loadBundle(const RunManifest& manifest);

}  // namespace dualcache::cli
