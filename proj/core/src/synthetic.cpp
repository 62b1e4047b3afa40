#include "dualcache/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dualcache/error.hpp"
#include "dualcache/random.hpp"

namespace dualcache {

namespace {

struct Layout {
  std::vector<std::size_t> signal;
  std::vector<std::size_t> nuisance;
};

std::vector<double> unitOn(Rng& rng, std::size_t dim, const std::vector<std::size_t>& channels) {
  std::vector<double> v(dim, 0.0);
  double sum = 0.0;
  for (std::size_t i : channels) {
    v[i] = standardNormal(rng);
    sum += v[i] * v[i];
  }
  for (std::size_t i : channels) v[i] /= std::sqrt(sum);
  return v;
}

// Appends normalize(center + signal noise + nuisance noise) to out.
void appendNoisy(std::vector<float>& out, const std::vector<double>& center, const Layout& layout,
                 double signalNoise, double nuisanceNoise, Rng& rng) {
  std::vector<double> v = center;
  const double s = signalNoise / std::sqrt(static_cast<double>(layout.signal.size()));
  for (std::size_t i : layout.signal) v[i] += s * standardNormal(rng);
  if (!layout.nuisance.empty()) {
    const double n = nuisanceNoise / std::sqrt(static_cast<double>(layout.nuisance.size()));
    for (std::size_t i : layout.nuisance) v[i] += n * standardNormal(rng);
  }
  double sum = 0.0;
  for (double x : v) sum += x * x;
  const double norm = std::sqrt(sum);
  for (double x : v) out.push_back(static_cast<float>(x / norm));
}

}  // namespace

DatasetBundle makeClusterFixture(const SyntheticSpec& spec) {
  const auto signalDim = static_cast<std::size_t>(
      std::lround(spec.signalFraction * static_cast<double>(spec.dim)));
  if (spec.dim < 2 || signalDim == 0 || signalDim > spec.dim || spec.classes == 0) {
    throw Error(ErrorKind::InvalidArgument, "degenerate synthetic fixture shape");
  }
  Rng rng(spec.seed);

  std::vector<std::size_t> channels(spec.dim);
  std::iota(channels.begin(), channels.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(channels), rng);
  Layout layout;
  layout.signal.assign(channels.begin(), channels.begin() + static_cast<std::ptrdiff_t>(signalDim));
  layout.nuisance.assign(channels.begin() + static_cast<std::ptrdiff_t>(signalDim), channels.end());
  std::sort(layout.signal.begin(), layout.signal.end());
  std::sort(layout.nuisance.begin(), layout.nuisance.end());

  std::vector<std::vector<double>> centers;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    centers.push_back(unitOn(rng, spec.dim, layout.signal));
  }
  const auto oodSignal = unitOn(rng, spec.dim, layout.signal);
  const auto background = layout.nuisance.empty() ? std::vector<double>(spec.dim, 0.0)
                                                  : unitOn(rng, spec.dim, layout.nuisance);
  const auto common = layout.nuisance.empty() ? std::vector<double>(spec.dim, 0.0)
                                              : unitOn(rng, spec.dim, layout.nuisance);
  for (auto& center : centers) {
    for (std::size_t i = 0; i < spec.dim; ++i) center[i] += spec.commonWeight * common[i];
  }
  std::vector<double> oodCenter(spec.dim);
  {
    double sum = 0.0;
    for (std::size_t i = 0; i < spec.dim; ++i) {
      oodCenter[i] = (1.0 - spec.oodBackground) * oodSignal[i] + spec.oodBackground * background[i];
      sum += oodCenter[i] * oodCenter[i];
    }
    for (std::size_t i = 0; i < spec.dim; ++i) {
      oodCenter[i] = oodCenter[i] / std::sqrt(sum) + spec.commonWeight * common[i];
    }
  }

  auto drawLabeled = [&](std::size_t perClass) {
    std::vector<float> data;
    std::vector<std::uint32_t> labels;
    for (std::size_t c = 0; c < spec.classes; ++c) {
      for (std::size_t k = 0; k < perClass; ++k) {
        appendNoisy(data, centers[c], layout, spec.sampleNoise, spec.nuisanceNoise, rng);
        labels.push_back(static_cast<std::uint32_t>(c));
      }
    }
    const std::size_t rows = labels.size();
    return LabeledEmbeddings{EmbeddingMatrix(rows, spec.dim, std::move(data), true),
                             std::move(labels), spec.classes};
  };

  DatasetBundle bundle;
  bundle.idTrain = drawLabeled(spec.trainPerClass);
  bundle.idTest = drawLabeled(spec.testPerClass);

  std::vector<float> ood;
  for (std::size_t i = 0; i < spec.oodCount; ++i) {
    appendNoisy(ood, oodCenter, layout, spec.sampleNoise, spec.nuisanceNoise, rng);
  }
  bundle.oodTest.push_back(
      {"far-cluster", EmbeddingMatrix(spec.oodCount, spec.dim, std::move(ood), true)});

  for (std::size_t c = 0; c < spec.classes; ++c) {
    bundle.vocab.names.push_back("class_" + std::to_string(c));
  }

  for (std::size_t t = 0; t < spec.templates; ++t) {
    std::vector<float> rows;
    for (const auto& center : centers) {
      appendNoisy(rows, center, layout, spec.textNoise, spec.textNoise, rng);
    }
    bundle.positiveText.templates.push_back("prompt " + std::to_string(t) + " of {class}");
    bundle.positiveText.embeddings.emplace_back(spec.classes, spec.dim, std::move(rows), true);
  }
  std::vector<float> photo;
  std::vector<float> scene;
  for (const auto& center : centers) {
    appendNoisy(photo, center, layout, spec.textNoise, spec.textNoise, rng);
    appendNoisy(scene, background, layout, spec.textNoise, spec.textNoise, rng);
  }
  bundle.negativeText.templates = {"a photo of {class}", "background of {class}"};
  bundle.negativeText.embeddings.emplace_back(spec.classes, spec.dim, std::move(photo), true);
  bundle.negativeText.embeddings.emplace_back(spec.classes, spec.dim, std::move(scene), true);
  return bundle;
}

}  // namespace dualcache
