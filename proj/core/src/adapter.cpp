#include "dualcache/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dualcache/error.hpp"
#include "dualcache/parallel.hpp"

namespace dualcache {

namespace {

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void requireDim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": got " +
                                                  std::to_string(got) + ", expected " +
                                                  std::to_string(want));
  }
}

void requireTau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorKind::InvalidArgument, "tau must be positive and finite");
  }
}

std::vector<double> normalized(std::vector<double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  const double norm = std::sqrt(sum);
  if (norm == 0.0) throw Error(ErrorKind::ZeroNormRow, "adapter input has zero norm");
  for (double& x : v) x /= norm;
  return v;
}

ChannelList fullRange(std::size_t n) {
  ChannelList all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

}  // namespace

const char* to_string(AdapterMode mode) noexcept {
  switch (mode) {
    case AdapterMode::PositiveOnly: return "positive-only";
    case AdapterMode::NegativeOnly: return "negative-only";
    case AdapterMode::Dual: return "dual";
    case AdapterMode::McmBaseline: return "mcm-baseline";
  }
  return "unknown";
}

const char* to_string(Pooling pooling) noexcept {
  return pooling == Pooling::Restrict ? "restrict" : "avgpool";
}

AdapterMode parseAdapterMode(const std::string& text) {
  for (auto mode : {AdapterMode::PositiveOnly, AdapterMode::NegativeOnly, AdapterMode::Dual,
                    AdapterMode::McmBaseline}) {
    if (text == to_string(mode)) return mode;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown adapter mode '" + text + "'");
}

Pooling parsePooling(const std::string& text) {
  if (text == "restrict") return Pooling::Restrict;
  if (text == "avgpool") return Pooling::AvgPool;
  throw Error(ErrorKind::InvalidArgument, "unknown pooling '" + text + "'");
}

void AdapterConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::InvalidArgument, "alpha must be finite and >= 0");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorKind::InvalidArgument, "beta must be finite and >= 0");
  }
  requireTau(tau);
}

bool AdapterConfig::withinSearchRanges() const noexcept {
  return alpha >= 0.0 && alpha <= kMaxResidual && beta >= 0.0 && beta <= kMaxResidual &&
         tau >= kMinTau && tau <= kMaxTau;
}

std::vector<double> softmax(std::span<const double> logits, double tau) {
  requireTau(tau);
  if (logits.empty()) throw Error(ErrorKind::EmptyList, "softmax of an empty vector");
  const double top = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(top)) {
    throw Error(ErrorKind::NonFiniteValue, "softmax needs a finite maximum logit");
  }
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - top) / tau);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

std::vector<double> dualFuse(std::span<const double> pPos, std::span<const double> pNeg,
                             double tau) {
  std::vector<double> joined;
  joined.reserve(pPos.size() + pNeg.size());
  joined.insert(joined.end(), pPos.begin(), pPos.end());
  joined.insert(joined.end(), pNeg.begin(), pNeg.end());
  return softmax(joined, tau);
}

double mcmScore(std::span<const double> feature, const TextClassifier& classifier, double tau) {
  const auto sims = zeroShotLogits(feature, classifier);
  const auto probs = softmax(sims, tau);
  return *std::max_element(probs.begin(), probs.end());
}

DualEngine DualEngine::assemble(const LabeledEmbeddings& shots, const TemplateSet& positiveText,
                                const TemplateSet& negativeText,
                                const ChannelPartition& partition,
                                const AdapterConfig& config) {
  partition.validate();
  requireDim(shots.embeddings.dim(), partition.channels(), "shot dim vs partition");
  const EmbeddingMatrix posText = averageTemplates(positiveText.embeddings);
  const EmbeddingMatrix negText = averageTemplates(negativeText.embeddings);
  requireDim(posText.rows(), shots.classCount, "positive text classes");
  requireDim(negText.rows(), shots.classCount, "negative text classes");

  TextClassifier baseline = classifierFromProjected(
      restrictChannels(posText, fullRange(partition.channels())), Polarity::Positive,
      positiveText.templates);

  if (config.pooling == Pooling::AvgPool) {
    const LabeledEmbeddings pooled{avgPoolPairs(shots.embeddings), shots.labels,
                                   shots.classCount};
    CacheModel cache = buildCacheFromProjected(pooled);
    return DualEngine(cache, cache,
                      classifierFromProjected(avgPoolPairs(posText), Polarity::Positive,
                                              positiveText.templates),
                      classifierFromProjected(avgPoolPairs(negText), Polarity::Negative,
                                              negativeText.templates),
                      std::move(baseline), partition, config);
  }
  return DualEngine(
      buildCache(shots, partition.positive), buildCache(shots, partition.negative),
      classifierFromProjected(restrictChannels(posText, partition.positive), Polarity::Positive,
                              positiveText.templates),
      classifierFromProjected(restrictChannels(negText, partition.negative), Polarity::Negative,
                              negativeText.templates),
      std::move(baseline), partition, config);
}

DualEngine::DualEngine(CacheModel positiveCache, CacheModel negativeCache,
                       TextClassifier positiveClassifier, TextClassifier negativeClassifier,
                       TextClassifier baselineClassifier, ChannelPartition partition,
                       AdapterConfig config)
    : positiveCache_(std::move(positiveCache)),
      negativeCache_(std::move(negativeCache)),
      positiveClassifier_(std::move(positiveClassifier)),
      negativeClassifier_(std::move(negativeClassifier)),
      baselineClassifier_(std::move(baselineClassifier)),
      partition_(std::move(partition)),
      config_(config) {
  config_.validate();
  partition_.validate();
  const std::size_t n = partition_.channels();
  requireDim(baselineClassifier_.dim(), n, "baseline classifier dim");
  const std::size_t posDim =
      config_.pooling == Pooling::Restrict ? partition_.positive.size() : n / 2;
  const std::size_t negDim =
      config_.pooling == Pooling::Restrict ? partition_.negative.size() : n / 2;
  requireDim(positiveCache_.dim(), posDim, "positive cache dim");
  requireDim(positiveClassifier_.dim(), posDim, "positive classifier dim");
  requireDim(negativeCache_.dim(), negDim, "negative cache dim");
  requireDim(negativeClassifier_.dim(), negDim, "negative classifier dim");
  const std::size_t c = baselineClassifier_.classCount();
  for (std::size_t count : {positiveCache_.classCount(), negativeCache_.classCount(),
                            positiveClassifier_.classCount(),
                            negativeClassifier_.classCount()}) {
    requireDim(count, c, "class count");
  }
}

DualEngine DualEngine::withConfig(const AdapterConfig& config) const {
  if (config.pooling != config_.pooling) {
    throw Error(ErrorKind::InvalidArgument, "pooling is fixed when the engine is assembled");
  }
  DualEngine copy = *this;
  config.validate();
  copy.config_ = config;
  return copy;
}

void DualEngine::checkInput(std::span<const float> feature) const {
  requireDim(feature.size(), inputDim(), "feature dim");
}

std::vector<double> DualEngine::project(std::span<const float> feature,
                                        const ChannelList& side) const {
  checkInput(feature);
  std::vector<double> out;
  if (config_.pooling == Pooling::AvgPool) {
    if (feature.size() % 2 != 0) throw Error(ErrorKind::OddDimension, "feature dim is odd");
    out.reserve(feature.size() / 2);
    for (std::size_t j = 0; j < feature.size() / 2; ++j) {
      out.push_back((static_cast<double>(feature[2 * j]) + feature[2 * j + 1]) / 2.0);
    }
  } else {
    out.reserve(side.size());
    for (std::size_t i : side) out.push_back(feature[i]);
  }
  return normalized(std::move(out));
}

std::vector<double> DualEngine::projectPositive(std::span<const float> feature) const {
  return project(feature, partition_.positive);
}

std::vector<double> DualEngine::projectNegative(std::span<const float> feature) const {
  return project(feature, partition_.negative);
}

std::vector<double> DualEngine::positiveLogits(std::span<const float> feature) const {
  const auto f = projectPositive(feature);
  return fusedLogits(zeroShotLogits(f, positiveClassifier_),
                     affinity(f, positiveCache_, config_.beta), positiveCache_, config_.alpha);
}

std::vector<double> DualEngine::negativeLogits(std::span<const float> feature) const {
  const auto f = projectNegative(feature);
  return fusedLogits(zeroShotLogits(f, negativeClassifier_),
                     affinity(f, negativeCache_, config_.beta), negativeCache_, config_.alpha);
}

ScoreRecord DualEngine::scoreSample(std::span<const float> feature) const {
  ScoreRecord rec;
  rec.positiveLogits = positiveLogits(feature);
  rec.negativeLogits = negativeLogits(feature);
  rec.dualProbabilities = dualFuse(rec.positiveLogits, rec.negativeLogits, config_.tau);
  const std::size_t c = rec.positiveLogits.size();

  switch (config_.mode) {
    case AdapterMode::Dual: {
      const std::span<const double> idHalf(rec.dualProbabilities.data(), c);
      rec.predictedClass = argmax(idHalf);
      rec.oodScore = idHalf[rec.predictedClass];
      break;
    }
    case AdapterMode::PositiveOnly: {
      const auto probs = softmax(rec.positiveLogits, config_.tau);
      rec.predictedClass = argmax(rec.positiveLogits);
      rec.oodScore = *std::max_element(probs.begin(), probs.end());
      break;
    }
    case AdapterMode::NegativeOnly: {
      std::vector<double> flipped(rec.negativeLogits);
      for (double& v : flipped) v = -v;
      const auto probs = softmax(flipped, config_.tau);
      rec.predictedClass = argmax(flipped);
      rec.oodScore = *std::max_element(probs.begin(), probs.end());
      break;
    }
    case AdapterMode::McmBaseline: {
      std::vector<double> full(feature.begin(), feature.end());
      full = normalized(std::move(full));
      const auto sims = zeroShotLogits(full, baselineClassifier_);
      const auto probs = softmax(sims, config_.tau);
      rec.predictedClass = argmax(sims);
      rec.oodScore = *std::max_element(probs.begin(), probs.end());
      break;
    }
  }
  return rec;
}

std::vector<ScoreRecord> DualEngine::scoreBatch(const EmbeddingMatrix& features,
                                                std::size_t threads) const {
  std::vector<ScoreRecord> out(features.rows());
  parallelFor(features.rows(), threads,
              [&](std::size_t r) { out[r] = scoreSample(features.row(r)); });
  return out;
}

std::vector<double> DualEngine::oodScores(const EmbeddingMatrix& features,
                                          std::size_t threads) const {
  std::vector<double> out(features.rows());
  parallelFor(features.rows(), threads,
              [&](std::size_t r) { out[r] = scoreSample(features.row(r)).oodScore; });
  return out;
}

}  // namespace dualcache
