#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dualcache/cache_model.hpp"
#include "dualcache/channel_selector.hpp"
#include "dualcache/embedding_store.hpp"
#include "dualcache/text_classifier.hpp"

namespace dualcache {

enum class AdapterMode { PositiveOnly, NegativeOnly, Dual, McmBaseline };

// How a full N-channel feature is reduced to each adapter's input.
enum class Pooling {
  // Positive side keeps the positive channels, negative side the negative ones.
  Restrict,
  // Both sides use the mean of adjacent channel pairs (dim N/2).
  AvgPool,
};

const char* to_string(AdapterMode mode) noexcept;
const char* to_string(Pooling pooling) noexcept;
AdapterMode parseAdapterMode(const std::string& text);
Pooling parsePooling(const std::string& text);

struct AdapterConfig {
  static constexpr double kMaxResidual = 30.0;
  static constexpr double kMinTau = 0.03;
  static constexpr double kMaxTau = 10.0;

  double alpha = 1.0;  // cache residual weight
  double beta = 5.5;   // affinity sharpness
  double tau = 1.0;    // softmax temperature
  AdapterMode mode = AdapterMode::Dual;
  Pooling pooling = Pooling::Restrict;

  // Hard limits: alpha, beta >= 0 and tau > 0.
  void validate() const;
  // The customary search box: alpha, beta in [0, 30], tau in [0.03, 10].
  bool withinSearchRanges() const noexcept;
};

struct ScoreRecord {
  double oodScore = 0.0;  // higher means more in-distribution
  std::size_t predictedClass = 0;
  std::vector<double> positiveLogits;
  std::vector<double> negativeLogits;
  std::vector<double> dualProbabilities;  // softmax over [P+, P-] / tau
};

// Max-subtracted softmax of logits / tau. Entries equal to -inf get zero mass.
std::vector<double> softmax(std::span<const double> logits, double tau);

// Softmax over the 2C concatenation [pPos, pNeg] at temperature tau.
std::vector<double> dualFuse(std::span<const double> pPos, std::span<const double> pNeg,
                             double tau);

// Maximum softmax probability of cosine similarities to the classifier rows.
double mcmScore(std::span<const double> feature, const TextClassifier& classifier, double tau);

class DualEngine {
 public:
  // Builds both caches and classifiers from normalized shots and template
  // embeddings. The baseline classifier uses the positive templates on all
  // N channels and backs the MCM baseline mode.
  static DualEngine assemble(const LabeledEmbeddings& shots, const TemplateSet& positiveText,
                             const TemplateSet& negativeText, const ChannelPartition& partition,
                             const AdapterConfig& config);

  DualEngine(CacheModel positiveCache, CacheModel negativeCache,
             TextClassifier positiveClassifier, TextClassifier negativeClassifier,
             TextClassifier baselineClassifier, ChannelPartition partition,
             AdapterConfig config);

  const CacheModel& positiveCache() const noexcept { return positiveCache_; }
  const CacheModel& negativeCache() const noexcept { return negativeCache_; }
  const TextClassifier& positiveClassifier() const noexcept { return positiveClassifier_; }
  const TextClassifier& negativeClassifier() const noexcept { return negativeClassifier_; }
  const TextClassifier& baselineClassifier() const noexcept { return baselineClassifier_; }
  const ChannelPartition& partition() const noexcept { return partition_; }
  const AdapterConfig& config() const noexcept { return config_; }
  std::size_t inputDim() const noexcept { return baselineClassifier_.dim(); }
  std::size_t classCount() const noexcept { return baselineClassifier_.classCount(); }

  // Same caches and classifiers under different alpha/beta/tau/mode.
  // Pooling is fixed at assembly time and must not change.
  DualEngine withConfig(const AdapterConfig& config) const;

  // Unit-norm adapter inputs f_Q for each side.
  std::vector<double> projectPositive(std::span<const float> feature) const;
  std::vector<double> projectNegative(std::span<const float> feature) const;

  std::vector<double> positiveLogits(std::span<const float> feature) const;
  std::vector<double> negativeLogits(std::span<const float> feature) const;

  ScoreRecord scoreSample(std::span<const float> feature) const;
  std::vector<ScoreRecord> scoreBatch(const EmbeddingMatrix& features,
                                      std::size_t threads = 1) const;
  std::vector<double> oodScores(const EmbeddingMatrix& features, std::size_t threads = 1) const;

 private:
  std::vector<double> project(std::span<const float> feature, const ChannelList& side) const;
  void checkInput(std::span<const float> feature) const;

  CacheModel positiveCache_;
  CacheModel negativeCache_;
  TextClassifier positiveClassifier_;
  TextClassifier negativeClassifier_;
  TextClassifier baselineClassifier_;
  ChannelPartition partition_;
  AdapterConfig config_;
};

}  // namespace dualcache
