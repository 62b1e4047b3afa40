#include "dualcache/cache_model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dualcache/error.hpp"
#include "dualcache/text_classifier.hpp"

namespace dualcache {

namespace {

double dot(std::span<const double> a, std::span<const float> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * static_cast<double>(b[i]);
  return sum;
}

void requireDim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": got " +
                                                  std::to_string(got) + ", expected " +
                                                  std::to_string(want));
  }
}

}  // namespace

CacheModel::CacheModel(EmbeddingMatrix keys, std::vector<std::uint32_t> labels,
                       std::size_t classCount)
    : keys_(std::move(keys)), labels_(std::move(labels)), classCount_(classCount) {
  requireDim(labels_.size(), keys_.rows(), "cache labels");
  if (!keys_.normalized()) {
    throw Error(ErrorKind::InvalidArgument, "cache keys must be unit-norm");
  }
  if (classCount_ == 0 || labels_.empty()) {
    throw Error(ErrorKind::EmptyShots, "cache needs at least one class and one shot");
  }
  std::vector<std::size_t> perClass(classCount_, 0);
  for (auto l : labels_) {
    if (l >= classCount_) {
      throw Error(ErrorKind::LabelOutOfRange, "cache label " + std::to_string(l));
    }
    ++perClass[l];
  }
  shotCount_ = perClass.front();
  for (std::size_t c = 0; c < classCount_; ++c) {
    if (perClass[c] != shotCount_) {
      throw Error(ErrorKind::InsufficientShots,
                  "class " + std::to_string(c) + " has " + std::to_string(perClass[c]) +
                      " cache entries, class 0 has " + std::to_string(shotCount_));
    }
  }
}

EmbeddingMatrix CacheModel::labelsOneHot() const {
  std::vector<float> data(labels_.size() * classCount_, 0.0f);
  for (std::size_t r = 0; r < labels_.size(); ++r) data[r * classCount_ + labels_[r]] = 1.0f;
  return EmbeddingMatrix(labels_.size(), classCount_, std::move(data), false);
}

CacheModel buildCacheFromProjected(const LabeledEmbeddings& projected) {
  projected.validate();
  return CacheModel(l2Normalize(projected.embeddings), projected.labels, projected.classCount);
}

CacheModel buildCache(const LabeledEmbeddings& shots, const ChannelList& idx) {
  return buildCacheFromProjected(
      {restrictChannels(shots.embeddings, idx), shots.labels, shots.classCount});
}

std::vector<double> affinity(std::span<const double> query, const CacheModel& cache,
                             double beta) {
  requireDim(query.size(), cache.dim(), "affinity query");
  if (!(beta >= 0.0)) throw Error(ErrorKind::InvalidArgument, "beta must be >= 0");
  std::vector<double> out(cache.entries());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = std::exp(-beta * (1.0 - dot(query, cache.keys().row(j))));
  }
  return out;
}

std::vector<double> zeroShotLogits(std::span<const double> query,
                                   const TextClassifier& classifier) {
  requireDim(query.size(), classifier.dim(), "zero-shot query");
  std::vector<double> out(classifier.classCount());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = dot(query, classifier.matrix().row(c));
  return out;
}

std::vector<double> fusedLogits(std::span<const double> zeroShot, std::span<const double> aff,
                                const CacheModel& cache, double alpha) {
  requireDim(zeroShot.size(), cache.classCount(), "zero-shot logits");
  requireDim(aff.size(), cache.entries(), "affinity row");
  std::vector<double> cacheTerm(cache.classCount(), 0.0);
  const auto& labels = cache.labels();
  for (std::size_t j = 0; j < aff.size(); ++j) cacheTerm[labels[j]] += aff[j];
  std::vector<double> out(zeroShot.begin(), zeroShot.end());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] += alpha * cacheTerm[c];
  return out;
}

void saveCache(const std::filesystem::path& stem, const CacheModel& cache,
               const CacheMetadata& meta) {
  const std::string base = stem.string();
  saveEmbeddings(base + ".keys.emb", cache.keys());
  saveEmbeddings(base + ".onehot.emb", cache.labelsOneHot());
  std::ofstream out(base + ".meta.txt", std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + base + ".meta.txt");
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(meta.partitionHash));
  out << "C=" << meta.classCount << '\n'
      << "K=" << meta.shotCount << '\n'
      << "Q=" << meta.q << '\n'
      << "partition_hash=" << hash << '\n';
}

CacheModel loadCache(const std::filesystem::path& stem, CacheMetadata* meta) {
  const std::string base = stem.string();
  const EmbeddingMatrix keys = loadEmbeddings(base + ".keys.emb");
  const EmbeddingMatrix onehot = loadEmbeddings(base + ".onehot.emb");
  requireDim(onehot.rows(), keys.rows(), "one-hot rows");
  std::vector<std::uint32_t> labels(onehot.rows());
  for (std::size_t r = 0; r < onehot.rows(); ++r) {
    std::size_t hot = onehot.dim();
    for (std::size_t c = 0; c < onehot.dim(); ++c) {
      const float v = onehot.at(r, c);
      if (v == 1.0f && hot == onehot.dim()) {
        hot = c;
      } else if (v != 0.0f) {
        hot = onehot.dim();
        break;
      }
    }
    if (hot == onehot.dim()) {
      throw Error(ErrorKind::InvalidArgument, base + ".onehot.emb: row " + std::to_string(r) +
                                                  " is not one-hot");
    }
    labels[r] = static_cast<std::uint32_t>(hot);
  }
  CacheModel cache(keys, std::move(labels), onehot.dim());
  if (meta) {
    std::ifstream in(base + ".meta.txt");
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + base + ".meta.txt");
    std::string line;
    *meta = {};
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      if (key == "C") meta->classCount = std::stoul(value);
      else if (key == "K") meta->shotCount = std::stoul(value);
      else if (key == "Q") meta->q = std::stoul(value);
      else if (key == "partition_hash") meta->partitionHash = std::stoull(value, nullptr, 16);
    }
  }
  return cache;
}

}  // namespace dualcache
