#include "dualcache/embedding_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>

#include "dualcache/error.hpp"
#include "dualcache/random.hpp"

namespace dualcache {

namespace {

constexpr std::size_t kEmbHeaderBytes = 32;
constexpr std::size_t kLblHeaderBytes = 12;
constexpr std::uint32_t kFormatVersion = 1;

void putU32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::byte>((v >> shift) & 0xffu));
  }
}

std::uint32_t getU32(std::span<const std::byte> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  }
  return v;
}

bool hasMagic(std::span<const std::byte> bytes, const char (&magic)[5]) {
  if (bytes.size() < 4) return false;
  for (std::size_t i = 0; i < 4; ++i) {
    if (bytes[i] != static_cast<std::byte>(magic[i])) return false;
  }
  return true;
}

std::vector<std::byte> readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::IoError, "cannot open " + path.string());
  }
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> bytes(raw.size());
  std::memcpy(bytes.data(), raw.data(), raw.size());
  return bytes;
}

void writeFile(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::IoError, "cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorKind::IoError, "short write to " + path.string());
  }
}

double rowNorm(std::span<const float> row) {
  double sum = 0.0;
  for (float v : row) sum += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(sum);
}

// Re-throws with the file path prepended so CLI users see where it failed.
template <typename Fn>
auto withPath(const std::filesystem::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data,
                                 bool normalized)
    : rows_(rows), dim_(dim), data_(std::move(data)), normalized_(normalized) {
  if (data_.size() != rows_ * dim_) {
    throw Error(ErrorKind::DimensionMismatch,
                "payload holds " + std::to_string(data_.size()) + " values, expected " +
                    std::to_string(rows_) + "x" + std::to_string(dim_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error(ErrorKind::NonFiniteValue,
                  "row " + std::to_string(i / (dim_ ? dim_ : 1)) + " column " +
                      std::to_string(dim_ ? i % dim_ : 0));
    }
  }
  if (normalized_) {
    for (std::size_t r = 0; r < rows_; ++r) {
      const double norm = rowNorm(row(r));
      if (std::abs(norm - 1.0) > kNormTolerance) {
        throw Error(ErrorKind::NormViolation,
                    "row " + std::to_string(r) + " has norm " + std::to_string(norm));
      }
    }
  }
}

void LabeledEmbeddings::validate() const {
  if (labels.size() != embeddings.rows()) {
    throw Error(ErrorKind::DimensionMismatch,
                std::to_string(labels.size()) + " labels for " +
                    std::to_string(embeddings.rows()) + " embedding rows");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classCount) {
      throw Error(ErrorKind::LabelOutOfRange,
                  "label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                      " >= class count " + std::to_string(classCount));
    }
  }
}

void ClassVocabulary::validate() const {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!seen.insert(names[i]).second) {
      throw Error(ErrorKind::DuplicateClassName,
                  "'" + names[i] + "' repeated at line " + std::to_string(i + 1));
    }
  }
}

void DatasetBundle::validate() const {
  idTrain.validate();
  idTest.validate();
  vocab.validate();
  const std::size_t n = dim();
  auto checkDim = [n](const EmbeddingMatrix& m, const std::string& what) {
    if (m.dim() != n) {
      throw Error(ErrorKind::DimensionMismatch,
                  what + " has dim " + std::to_string(m.dim()) + ", expected " +
                      std::to_string(n));
    }
  };
  checkDim(idTest.embeddings, "id test set");
  for (const auto& ood : oodTest) checkDim(ood.embeddings, "ood set '" + ood.name + "'");
  for (const auto* set : {&positiveText, &negativeText}) {
    for (const auto& t : set->embeddings) {
      checkDim(t, "text template matrix");
      if (t.rows() != vocab.classCount()) {
        throw Error(ErrorKind::TemplateCountMismatch,
                    "text template matrix has " + std::to_string(t.rows()) + " rows for " +
                        std::to_string(vocab.classCount()) + " classes");
      }
    }
  }
  if (idTrain.classCount != vocab.classCount() || idTest.classCount != vocab.classCount()) {
    throw Error(ErrorKind::DimensionMismatch, "class counts disagree with the vocabulary");
  }
}

EmbeddingMatrix decodeEmbeddings(std::span<const std::byte> bytes) {
  if (!hasMagic(bytes, "EMB1")) {
    throw Error(ErrorKind::BadMagic, "expected 'EMB1' at offset 0");
  }
  if (bytes.size() < kEmbHeaderBytes) {
    throw Error(ErrorKind::TruncatedFile, "header needs 32 bytes, file has " +
                                              std::to_string(bytes.size()));
  }
  const std::uint32_t version = getU32(bytes, 4);
  if (version != kFormatVersion) {
    throw Error(ErrorKind::MalformedHeader,
                "unsupported version " + std::to_string(version) + " at offset 4");
  }
  const std::size_t rows = getU32(bytes, 8);
  const std::size_t dim = getU32(bytes, 12);
  const auto flag = static_cast<std::uint8_t>(bytes[16]);
  if (flag > 1) {
    throw Error(ErrorKind::MalformedHeader,
                "normalized flag " + std::to_string(flag) + " at offset 16");
  }
  for (std::size_t i = 17; i < kEmbHeaderBytes; ++i) {
    if (bytes[i] != std::byte{0}) {
      throw Error(ErrorKind::MalformedHeader, "non-zero reserved byte at offset " +
                                                  std::to_string(i));
    }
  }
  const std::size_t count = rows * dim;
  const std::size_t payload = bytes.size() - kEmbHeaderBytes;
  if (payload / 4 < count) {
    throw Error(ErrorKind::TruncatedFile,
                "declared " + std::to_string(rows) + "x" + std::to_string(dim) + " needs " +
                    std::to_string(count * 4) + " payload bytes, found " +
                    std::to_string(payload) + " (offset " + std::to_string(bytes.size()) + ")");
  }
  if (payload != count * 4) {
    throw Error(ErrorKind::DimensionMismatch,
                std::to_string(payload - count * 4) + " trailing bytes after offset " +
                    std::to_string(kEmbHeaderBytes + count * 4));
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(getU32(bytes, kEmbHeaderBytes + 4 * i));
  }
  return EmbeddingMatrix(rows, dim, std::move(data), flag == 1);
}

std::vector<std::byte> encodeEmbeddings(const EmbeddingMatrix& m) {
  std::vector<std::byte> out;
  out.reserve(kEmbHeaderBytes + 4 * m.values().size());
  for (char c : {'E', 'M', 'B', '1'}) out.push_back(static_cast<std::byte>(c));
  putU32(out, kFormatVersion);
  putU32(out, static_cast<std::uint32_t>(m.rows()));
  putU32(out, static_cast<std::uint32_t>(m.dim()));
  out.push_back(std::byte{static_cast<unsigned char>(m.normalized() ? 1 : 0)});
  out.resize(kEmbHeaderBytes, std::byte{0});
  for (float v : m.values()) putU32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

EmbeddingMatrix loadEmbeddings(const std::filesystem::path& path) {
  return withPath(path, [&] { return decodeEmbeddings(readFile(path)); });
}

void saveEmbeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  writeFile(path, encodeEmbeddings(m));
}

std::vector<std::uint32_t> loadLabels(const std::filesystem::path& path) {
  return withPath(path, [&] {
    const auto bytes = readFile(path);
    if (!hasMagic(bytes, "LBL1")) {
      throw Error(ErrorKind::BadMagic, "expected 'LBL1' at offset 0");
    }
    if (bytes.size() < kLblHeaderBytes) {
      throw Error(ErrorKind::TruncatedFile, "label header needs 12 bytes");
    }
    const std::uint32_t version = getU32(bytes, 4);
    if (version != kFormatVersion) {
      throw Error(ErrorKind::MalformedHeader, "unsupported version " + std::to_string(version));
    }
    const std::size_t count = getU32(bytes, 8);
    const std::size_t payload = bytes.size() - kLblHeaderBytes;
    if (payload / 4 < count) {
      throw Error(ErrorKind::TruncatedFile, "declared " + std::to_string(count) +
                                                " labels, payload holds " +
                                                std::to_string(payload / 4));
    }
    if (payload != count * 4) {
      throw Error(ErrorKind::DimensionMismatch, "trailing bytes after offset " +
                                                    std::to_string(kLblHeaderBytes + count * 4));
    }
    std::vector<std::uint32_t> labels(count);
    for (std::size_t i = 0; i < count; ++i) labels[i] = getU32(bytes, kLblHeaderBytes + 4 * i);
    return labels;
  });
}

void saveLabels(const std::filesystem::path& path, std::span<const std::uint32_t> labels) {
  std::vector<std::byte> out;
  out.reserve(kLblHeaderBytes + 4 * labels.size());
  for (char c : {'L', 'B', 'L', '1'}) out.push_back(static_cast<std::byte>(c));
  putU32(out, kFormatVersion);
  putU32(out, static_cast<std::uint32_t>(labels.size()));
  for (auto l : labels) putU32(out, l);
  writeFile(path, out);
}

ClassVocabulary loadVocabulary(const std::filesystem::path& path) {
  return withPath(path, [&] {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open vocabulary");
    ClassVocabulary vocab;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      vocab.names.push_back(line);
    }
    // A trailing newline does not introduce an empty class.
    while (!vocab.names.empty() && vocab.names.back().empty()) vocab.names.pop_back();
    vocab.validate();
    return vocab;
  });
}

void saveVocabulary(const std::filesystem::path& path, const ClassVocabulary& vocab) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  for (const auto& name : vocab.names) out << name << '\n';
}

TemplateSet loadTemplateSet(const std::filesystem::path& manifestPath,
                            const std::filesystem::path& dir, const std::string& dataset) {
  std::ifstream in(manifestPath);
  if (!in) throw Error(ErrorKind::IoError, "cannot open template manifest " + manifestPath.string());
  TemplateSet set;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(ErrorKind::ManifestError, manifestPath.string() + ":" + std::to_string(lineNo) +
                                                ": expected '<templateId>\\t<template>'");
    }
    const std::string id = line.substr(0, tab);
    set.templates.push_back(line.substr(tab + 1));
    set.embeddings.push_back(loadEmbeddings(dir / (dataset + "." + id + ".text.emb")));
  }
  if (set.embeddings.empty()) {
    throw Error(ErrorKind::EmptyList, manifestPath.string() + " lists no templates");
  }
  return set;
}

EmbeddingMatrix l2Normalize(const EmbeddingMatrix& m) {
  std::vector<float> out(m.values().size());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    const double norm = rowNorm(row);
    if (norm == 0.0) {
      throw Error(ErrorKind::ZeroNormRow, "row " + std::to_string(r));
    }
    for (std::size_t c = 0; c < m.dim(); ++c) {
      out[r * m.dim() + c] = static_cast<float>(static_cast<double>(row[c]) / norm);
    }
  }
  return EmbeddingMatrix(m.rows(), m.dim(), std::move(out), true);
}

LabeledEmbeddings l2Normalize(const LabeledEmbeddings& m) {
  return {l2Normalize(m.embeddings), m.labels, m.classCount};
}

EmbeddingMatrix selectRows(const EmbeddingMatrix& m, std::span<const std::size_t> rows) {
  std::vector<float> out;
  out.reserve(rows.size() * m.dim());
  for (std::size_t r : rows) {
    if (r >= m.rows()) {
      throw Error(ErrorKind::IndexOutOfRange,
                  "row " + std::to_string(r) + " of " + std::to_string(m.rows()));
    }
    const auto src = m.row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return EmbeddingMatrix(rows.size(), m.dim(), std::move(out), m.normalized());
}

LabeledEmbeddings sampleShots(const LabeledEmbeddings& train, std::size_t shots,
                              std::uint64_t seed) {
  train.validate();
  if (shots == 0) {
    throw Error(ErrorKind::InvalidArgument, "shot count must be positive");
  }
  std::vector<std::vector<std::size_t>> byClass(train.classCount);
  for (std::size_t i = 0; i < train.labels.size(); ++i) byClass[train.labels[i]].push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> picked;
  picked.reserve(train.classCount * shots);
  std::vector<std::uint32_t> labels;
  labels.reserve(train.classCount * shots);
  for (std::size_t c = 0; c < train.classCount; ++c) {
    auto& pool = byClass[c];
    if (pool.size() < shots) {
      throw Error(ErrorKind::InsufficientShots,
                  "class " + std::to_string(c) + " has " + std::to_string(pool.size()) +
                      " samples, " + std::to_string(shots) + " requested");
    }
    shuffle(std::span<std::size_t>(pool), rng);
    std::vector<std::size_t> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(shots));
    std::sort(chosen.begin(), chosen.end());
    picked.insert(picked.end(), chosen.begin(), chosen.end());
    labels.insert(labels.end(), shots, static_cast<std::uint32_t>(c));
  }
  return {selectRows(train.embeddings, picked), std::move(labels), train.classCount};
}

}  // namespace dualcache
