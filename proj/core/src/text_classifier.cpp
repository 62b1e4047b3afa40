#include "dualcache/text_classifier.hpp"

#include "dualcache/error.hpp"

namespace dualcache {

TextClassifier::TextClassifier(EmbeddingMatrix matrix, Polarity polarity,
                               std::vector<std::string> templates)
    : matrix_(std::move(matrix)), polarity_(polarity), templates_(std::move(templates)) {
  if (!matrix_.normalized()) {
    throw Error(ErrorKind::InvalidArgument, "classifier rows must be unit-norm");
  }
}

EmbeddingMatrix averageTemplates(std::span<const EmbeddingMatrix> perTemplate) {
  if (perTemplate.empty()) {
    throw Error(ErrorKind::TemplateCountMismatch, "no template embeddings supplied");
  }
  const std::size_t classes = perTemplate.front().rows();
  const std::size_t dim = perTemplate.front().dim();
  std::vector<double> sum(classes * dim, 0.0);
  for (std::size_t t = 0; t < perTemplate.size(); ++t) {
    const auto& m = perTemplate[t];
    if (m.rows() != classes || m.dim() != dim) {
      throw Error(ErrorKind::TemplateCountMismatch,
                  "template " + std::to_string(t) + " is " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.dim()) + ", expected " + std::to_string(classes) +
                      "x" + std::to_string(dim));
    }
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += m.values()[i];
  }
  std::vector<float> mean(sum.size());
  const double count = static_cast<double>(perTemplate.size());
  for (std::size_t i = 0; i < sum.size(); ++i) mean[i] = static_cast<float>(sum[i] / count);
  return EmbeddingMatrix(classes, dim, std::move(mean), false);
}

TextClassifier classifierFromProjected(const EmbeddingMatrix& projected, Polarity polarity,
                                       std::vector<std::string> templates) {
  return TextClassifier(l2Normalize(projected), polarity, std::move(templates));
}

TextClassifier buildClassifier(std::span<const EmbeddingMatrix> perTemplate,
                               const ChannelList& idx, Polarity polarity,
                               std::vector<std::string> templates) {
  return classifierFromProjected(restrictChannels(averageTemplates(perTemplate), idx), polarity,
                                 std::move(templates));
}

}  // namespace dualcache
