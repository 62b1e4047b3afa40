#include "dualcache/channel_selector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dualcache/error.hpp"

namespace dualcache {

namespace {

double combine(double s, double v, const SelectorConfig& cfg) {
  return cfg.criterion == CriterionMode::PaperLiteral
             ? cfg.lambda * s + (1.0 - cfg.lambda) * v
             : cfg.lambda * s - (1.0 - cfg.lambda) * v;
}

void appendList(std::ostringstream& out, const ChannelList& list) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (i) out << ' ';
    out << list[i];
  }
  out << '\n';
}

ChannelList parseList(const std::string& line) {
  ChannelList out;
  std::istringstream in(line);
  std::size_t v = 0;
  while (in >> v) out.push_back(v);
  if (!in.eof()) {
    throw Error(ErrorKind::ManifestError, "bad channel index list '" + line + "'");
  }
  return out;
}

}  // namespace

const char* to_string(CriterionMode mode) noexcept {
  return mode == CriterionMode::PaperLiteral ? "paper-literal" : "variance-negated";
}

CriterionMode parseCriterionMode(const std::string& text) {
  if (text == "paper-literal") return CriterionMode::PaperLiteral;
  if (text == "variance-negated") return CriterionMode::VarianceNegated;
  throw Error(ErrorKind::InvalidArgument, "unknown criterion mode '" + text + "'");
}

std::size_t SelectorConfig::resolveQ(std::size_t channels) const {
  return q.value_or(channels / 2);
}

void SelectorConfig::validate(std::size_t channels) const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "lambda must lie in [0,1], got " +
                                                std::to_string(lambda));
  }
  const std::size_t resolved = resolveQ(channels);
  if (resolved == 0 || resolved >= channels) {
    throw Error(ErrorKind::InvalidArgument, "Q=" + std::to_string(resolved) +
                                                " must satisfy 0 < Q < N=" +
                                                std::to_string(channels));
  }
}

void ChannelPartition::validate() const {
  const std::size_t n = channels();
  if (positive.size() != q) {
    throw Error(ErrorKind::InvalidArgument, "positive set has " +
                                                std::to_string(positive.size()) +
                                                " channels, Q=" + std::to_string(q));
  }
  std::vector<char> seen(n, 0);
  for (const auto* list : {&positive, &negative}) {
    if (!std::is_sorted(list->begin(), list->end())) {
      throw Error(ErrorKind::InvalidArgument, "channel lists must be sorted ascending");
    }
    for (std::size_t i : *list) {
      if (i >= n) throw Error(ErrorKind::IndexOutOfRange, "channel " + std::to_string(i));
      if (seen[i]++) {
        throw Error(ErrorKind::InvalidArgument, "channel " + std::to_string(i) + " listed twice");
      }
    }
  }
}

std::string ChannelPartition::serialize() const {
  std::ostringstream out;
  out << "Q=" << q << '\n';
  appendList(out, positive);
  appendList(out, negative);
  return out.str();
}

ChannelPartition ChannelPartition::parse(const std::string& text) {
  std::istringstream in(text);
  std::string header, pos, neg;
  std::getline(in, header);
  std::getline(in, pos);
  std::getline(in, neg);
  if (header.rfind("Q=", 0) != 0) {
    throw Error(ErrorKind::ManifestError, "partition must start with 'Q=<q>'");
  }
  ChannelPartition p;
  try {
    p.q = std::stoul(header.substr(2));
  } catch (const std::exception&) {
    throw Error(ErrorKind::ManifestError, "bad partition header '" + header + "'");
  }
  p.positive = parseList(pos);
  p.negative = parseList(neg);
  p.validate();
  return p;
}

std::uint64_t ChannelPartition::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

ChannelStats computeChannelStats(const LabeledEmbeddings& shots, const SelectorConfig& cfg) {
  shots.validate();
  if (shots.size() == 0) throw Error(ErrorKind::EmptyShots, "no shot rows");
  const std::size_t classes = shots.classCount;
  if (classes < 2) throw Error(ErrorKind::SingleClass, "need at least 2 classes");
  const std::size_t n = shots.embeddings.dim();

  // Class prototypes, accumulated in row order so results are reproducible.
  std::vector<double> proto(classes * n, 0.0);
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t r = 0; r < shots.size(); ++r) {
    const auto row = shots.embeddings.row(r);
    const std::size_t c = shots.labels[r];
    ++counts[c];
    for (std::size_t i = 0; i < n; ++i) proto[c * n + i] += row[i];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == 0) {
      throw Error(ErrorKind::EmptyShots, "class " + std::to_string(c) + " has no shots");
    }
    for (std::size_t i = 0; i < n; ++i) proto[c * n + i] /= static_cast<double>(counts[c]);
  }

  ChannelStats stats;
  stats.similarity.resize(n);
  stats.variance.resize(n);
  stats.importance.resize(n);
  const double pairs = static_cast<double>(classes * (classes - 1)) / 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pairSum = 0.0;
    double mean = 0.0;
    for (std::size_t a = 0; a < classes; ++a) {
      const double pa = proto[a * n + i];
      mean += pa;
      for (std::size_t b = a + 1; b < classes; ++b) pairSum += pa * proto[b * n + i];
    }
    mean /= static_cast<double>(classes);
    double var = 0.0;
    for (std::size_t a = 0; a < classes; ++a) {
      const double d = proto[a * n + i] - mean;
      var += d * d;
    }
    stats.similarity[i] = pairSum / pairs;
    stats.variance[i] = var / static_cast<double>(classes);
    stats.importance[i] = combine(stats.similarity[i], stats.variance[i], cfg);
  }
  return stats;
}

ChannelStats reweight(const ChannelStats& stats, const SelectorConfig& cfg) {
  ChannelStats out = stats;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.importance[i] = combine(out.similarity[i], out.variance[i], cfg);
  }
  return out;
}

ChannelPartition partitionChannels(const ChannelStats& stats, const SelectorConfig& cfg) {
  const std::size_t n = stats.size();
  cfg.validate(n);
  const std::size_t q = cfg.resolveQ(n);

  ChannelList order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return stats.importance[a] < stats.importance[b];
  });

  ChannelPartition p;
  p.q = q;
  p.positive.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(q));
  p.negative.assign(order.begin() + static_cast<std::ptrdiff_t>(q), order.end());
  std::sort(p.positive.begin(), p.positive.end());
  std::sort(p.negative.begin(), p.negative.end());
  return p;
}

EmbeddingMatrix restrictChannels(const EmbeddingMatrix& m, const ChannelList& idx) {
  for (std::size_t i : idx) {
    if (i >= m.dim()) {
      throw Error(ErrorKind::IndexOutOfRange, "channel " + std::to_string(i) +
                                                  " on dim-" + std::to_string(m.dim()) +
                                                  " matrix");
    }
  }
  std::vector<float> out;
  out.reserve(m.rows() * idx.size());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t i : idx) out.push_back(row[i]);
  }
  return EmbeddingMatrix(m.rows(), idx.size(), std::move(out), false);
}

EmbeddingMatrix avgPoolPairs(const EmbeddingMatrix& m) {
  if (m.dim() % 2 != 0) {
    throw Error(ErrorKind::OddDimension, "dim " + std::to_string(m.dim()) + " is odd");
  }
  const std::size_t half = m.dim() / 2;
  std::vector<float> out;
  out.reserve(m.rows() * half);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t j = 0; j < half; ++j) out.push_back((row[2 * j] + row[2 * j + 1]) / 2.0f);
  }
  return EmbeddingMatrix(m.rows(), half, std::move(out), false);
}

void savePartition(const std::filesystem::path& path, const ChannelPartition& p) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << p.serialize();
}

ChannelPartition loadPartition(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ChannelPartition::parse(buf.str());
}

}  // namespace dualcache
