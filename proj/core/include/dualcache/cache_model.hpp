#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dualcache/channel_selector.hpp"
#include "dualcache/embedding_store.hpp"

namespace dualcache {

class TextClassifier;

// Key-value cache over few-shot features: keys are unit-norm shot embeddings
// (possibly channel-restricted), values are their one-hot class labels.
class CacheModel {
 public:
  CacheModel() = default;
  // keys must be unit-norm; labels are class-major with exactly K per class.
  CacheModel(EmbeddingMatrix keys, std::vector<std::uint32_t> labels, std::size_t classCount);

  const EmbeddingMatrix& keys() const noexcept { return keys_; }
  const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }
  std::size_t classCount() const noexcept { return classCount_; }
  std::size_t shotCount() const noexcept { return shotCount_; }
  std::size_t dim() const noexcept { return keys_.dim(); }
  std::size_t entries() const noexcept { return keys_.rows(); }

  // Dense CK x C one-hot matrix; materialized on demand.
  EmbeddingMatrix labelsOneHot() const;

 private:
  EmbeddingMatrix keys_;
  std::vector<std::uint32_t> labels_;
  std::size_t classCount_ = 0;
  std::size_t shotCount_ = 0;
};

struct CacheMetadata {
  std::size_t classCount = 0;
  std::size_t shotCount = 0;
  std::size_t q = 0;
  std::uint64_t partitionHash = 0;
};

CacheModel buildCache(const LabeledEmbeddings& shots, const ChannelList& idx);
// Builds from features that were already projected to the cache's space.
CacheModel buildCacheFromProjected(const LabeledEmbeddings& projected);

// exp(-beta * (1 - <query, key_j>)) for every cached key.
std::vector<double> affinity(std::span<const double> query, const CacheModel& cache,
                             double beta);

std::vector<double> zeroShotLogits(std::span<const double> query,
                                   const TextClassifier& classifier);

// zeroShot + alpha * aff * L, with aff * L accumulated by class index.
std::vector<double> fusedLogits(std::span<const double> zeroShot, std::span<const double> aff,
                                const CacheModel& cache, double alpha);

// Writes <stem>.keys.emb, <stem>.onehot.emb and <stem>.meta.txt.
void saveCache(const std::filesystem::path& stem, const CacheModel& cache,
               const CacheMetadata& meta);
CacheModel loadCache(const std::filesystem::path& stem, CacheMetadata* meta = nullptr);

}  // namespace dualcache
