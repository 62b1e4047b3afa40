#pragma once

#include <filesystem>
#include <string>

#include "dualcache/embedding_store.hpp"

namespace dualcache::cli {

// Writes a bundle as EMB1/LBL1/vocabulary/template files under `dir`, using
// `dataset` as the file prefix. Returns the path of the JSON manifest, whose
// body is `manifestExtra` (a JSON object) merged with the generated paths.
std::filesystem::path writeBundle(const std::filesystem::path& dir, const std::string& dataset,
                                  const DatasetBundle& bundle,
                                  const std::string& manifestExtra = "{}");

}  // namespace dualcache::cli
