#pragma once

#include <span>
#include <string>
#include <vector>

#include "dualcache/channel_selector.hpp"
#include "dualcache/embedding_store.hpp"

namespace dualcache {

enum class Polarity { Positive, Negative };

// C x dim matrix of prompt-averaged, unit-norm class text embeddings.
class TextClassifier {
 public:
  TextClassifier() = default;
  TextClassifier(EmbeddingMatrix matrix, Polarity polarity, std::vector<std::string> templates);

  const EmbeddingMatrix& matrix() const noexcept { return matrix_; }
  Polarity polarity() const noexcept { return polarity_; }
  const std::vector<std::string>& templates() const noexcept { return templates_; }
  std::size_t classCount() const noexcept { return matrix_.rows(); }
  std::size_t dim() const noexcept { return matrix_.dim(); }

 private:
  EmbeddingMatrix matrix_;
  Polarity polarity_ = Polarity::Positive;
  std::vector<std::string> templates_;
};

// Averages the per-template C x N embeddings class-wise, keeps the channels in
// idx and re-normalizes each class row.
TextClassifier buildClassifier(std::span<const EmbeddingMatrix> perTemplate,
                               const ChannelList& idx, Polarity polarity = Polarity::Positive,
                               std::vector<std::string> templates = {});

// Class-wise template average over all N channels, not re-normalized.
EmbeddingMatrix averageTemplates(std::span<const EmbeddingMatrix> perTemplate);

// Wraps an already projected (C x dim) average; re-normalizes its rows.
TextClassifier classifierFromProjected(const EmbeddingMatrix& projected, Polarity polarity,
                                       std::vector<std::string> templates = {});

}  // namespace dualcache
