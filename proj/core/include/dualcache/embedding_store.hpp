#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dualcache {

// Dense row-major block of 32-bit feature vectors. When normalized() is true
// every row has unit Euclidean norm (checked to 1e-4 on construction).
class EmbeddingMatrix {
 public:
  static constexpr double kNormTolerance = 1e-4;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data,
                  bool normalized = false);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  bool normalized() const noexcept { return normalized_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const float> row(std::size_t r) const {
    return {data_.data() + r * dim_, dim_};
  }
  float at(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }
  const std::vector<float>& values() const noexcept { return data_; }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
  bool normalized_ = false;
};

struct LabeledEmbeddings {
  EmbeddingMatrix embeddings;
  std::vector<std::uint32_t> labels;
  std::size_t classCount = 0;

  // Throws DimensionMismatch / LabelOutOfRange when the invariants break.
  void validate() const;
  std::size_t size() const noexcept { return labels.size(); }
};

struct ClassVocabulary {
  std::vector<std::string> names;

  std::size_t classCount() const noexcept { return names.size(); }
  void validate() const;
};

struct NamedEmbeddings {
  std::string name;
  EmbeddingMatrix embeddings;
};

// Per-template text embeddings, one C x N matrix per prompt template.
struct TemplateSet {
  std::vector<std::string> templates;
  std::vector<EmbeddingMatrix> embeddings;
};

struct DatasetBundle {
  LabeledEmbeddings idTrain;
  LabeledEmbeddings idTest;
  std::vector<NamedEmbeddings> oodTest;
  ClassVocabulary vocab;
  TemplateSet positiveText;
  TemplateSet negativeText;

  std::size_t dim() const noexcept { return idTrain.embeddings.dim(); }
  void validate() const;
};

// EMB1 container: 32-byte header then rows*dim little-endian float32.
EmbeddingMatrix loadEmbeddings(const std::filesystem::path& path);
void saveEmbeddings(const std::filesystem::path& path, const EmbeddingMatrix& m);

EmbeddingMatrix decodeEmbeddings(std::span<const std::byte> bytes);
std::vector<std::byte> encodeEmbeddings(const EmbeddingMatrix& m);

// LBL1 sidecar: magic, version, count, then count uint32 class indices.
std::vector<std::uint32_t> loadLabels(const std::filesystem::path& path);
void saveLabels(const std::filesystem::path& path, std::span<const std::uint32_t> labels);

// One UTF-8 class name per line; line index is the class index.
ClassVocabulary loadVocabulary(const std::filesystem::path& path);
void saveVocabulary(const std::filesystem::path& path, const ClassVocabulary& vocab);

// Template manifest: "<templateId>\t<template string>" per line. Embeddings
// are read from <dir>/<dataset>.<templateId>.text.emb.
TemplateSet loadTemplateSet(const std::filesystem::path& manifestPath,
                            const std::filesystem::path& dir, const std::string& dataset);

EmbeddingMatrix l2Normalize(const EmbeddingMatrix& m);
LabeledEmbeddings l2Normalize(const LabeledEmbeddings& m);

// Draws exactly K rows per class, class-major, deterministic in seed.
LabeledEmbeddings sampleShots(const LabeledEmbeddings& train, std::size_t shots,
                              std::uint64_t seed);

// Gathers the given rows (in the given order) into a new matrix.
EmbeddingMatrix selectRows(const EmbeddingMatrix& m, std::span<const std::size_t> rows);

}  // namespace dualcache
