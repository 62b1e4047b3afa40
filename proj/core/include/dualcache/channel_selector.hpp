#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dualcache/embedding_store.hpp"

namespace dualcache {

using ChannelList = std::vector<std::size_t>;

// Per-channel inter-class similarity S, inter-class variance V and the
// combined importance F (smaller F = more influential channel).
struct ChannelStats {
  std::vector<double> similarity;
  std::vector<double> variance;
  std::vector<double> importance;

  std::size_t size() const noexcept { return importance.size(); }
};

enum class CriterionMode {
  // F = lambda*S + (1-lambda)*V; large variance counts against a channel.
  PaperLiteral,
  // F = lambda*S - (1-lambda)*V, so ranking by smallest F rewards variance.
  VarianceNegated,
};

struct SelectorConfig {
  double lambda = 0.5;
  // Number of positive channels; unset means floor(N/2).
  std::optional<std::size_t> q;
  CriterionMode criterion = CriterionMode::VarianceNegated;

  std::size_t resolveQ(std::size_t channels) const;
  void validate(std::size_t channels) const;
};

struct ChannelPartition {
  ChannelList positive;
  ChannelList negative;
  std::size_t q = 0;

  std::size_t channels() const noexcept { return positive.size() + negative.size(); }
  // Throws InvalidArgument unless positive/negative are sorted, disjoint and
  // cover 0..N-1 with |positive| == q.
  void validate() const;
  // Text form: "Q=<q>", positive indices, negative indices, one line each.
  std::string serialize() const;
  static ChannelPartition parse(const std::string& text);
  // FNV-1a over the serialized form; stable across platforms.
  std::uint64_t hash() const;

  friend bool operator==(const ChannelPartition&, const ChannelPartition&) = default;
};

const char* to_string(CriterionMode mode) noexcept;
CriterionMode parseCriterionMode(const std::string& text);

ChannelStats computeChannelStats(const LabeledEmbeddings& shots,
                                 const SelectorConfig& cfg = {});

// Recomputes F from stored S and V, for sweeping lambda without re-scanning shots.
ChannelStats reweight(const ChannelStats& stats, const SelectorConfig& cfg);

ChannelPartition partitionChannels(const ChannelStats& stats, const SelectorConfig& cfg);

EmbeddingMatrix restrictChannels(const EmbeddingMatrix& m, const ChannelList& idx);
EmbeddingMatrix avgPoolPairs(const EmbeddingMatrix& m);

void savePartition(const std::filesystem::path& path, const ChannelPartition& p);
ChannelPartition loadPartition(const std::filesystem::path& path);

}  // namespace dualcache
