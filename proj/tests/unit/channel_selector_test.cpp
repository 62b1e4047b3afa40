#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "bridge.hpp"
#include "dualcache/channel_selector.hpp"
#include "dualcache/error.hpp"

using namespace dualcache;

namespace {

LabeledEmbeddings prototypes(std::vector<std::vector<float>> rows) {
  std::vector<std::uint32_t> labels(rows.size());
  std::iota(labels.begin(), labels.end(), 0u);
  return {testing_support::toMatrix(rows), labels, rows.size()};
}

ChannelStats fromImportance(std::vector<double> f) {
  ChannelStats s;
  s.similarity = f;
  s.variance.assign(f.size(), 0.0);
  s.importance = std::move(f);
  return s;
}

SelectorConfig withQ(std::size_t q) {
  SelectorConfig cfg;
  cfg.q = q;
  return cfg;
}

}  // namespace

TEST(ChannelStats, IdenticalPrototypes) {
  const auto s = computeChannelStats(prototypes({{1.f, 0.f}, {1.f, 0.f}}));
  EXPECT_DOUBLE_EQ(s.similarity[0], 1.0);
  EXPECT_DOUBLE_EQ(s.variance[0], 0.0);
  EXPECT_DOUBLE_EQ(s.similarity[1], 0.0);
  EXPECT_DOUBLE_EQ(s.variance[1], 0.0);
}

TEST(ChannelStats, OpposedPrototypes) {
  const auto s = computeChannelStats(prototypes({{1.f, 0.f}, {-1.f, 0.f}}));
  EXPECT_DOUBLE_EQ(s.similarity[0], -1.0);
  EXPECT_DOUBLE_EQ(s.variance[0], 1.0);
}

TEST(ChannelStats, LambdaBoundaries) {
  std::mt19937_64 rng(5);
  naive::Rows rows;
  for (int i = 0; i < 4; ++i) rows.push_back(naive::randomUnit(rng, 6));
  const auto shots = prototypes(rows);
  SelectorConfig cfg;
  cfg.lambda = 1.0;
  auto s = computeChannelStats(shots, cfg);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.importance[i], s.similarity[i]);
  cfg.lambda = 0.0;
  s = computeChannelStats(shots, cfg);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.importance[i], -s.variance[i]);
  cfg.criterion = CriterionMode::PaperLiteral;
  s = computeChannelStats(shots, cfg);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.importance[i], s.variance[i]);
}

TEST(ChannelStats, MatchesNaiveOnRandomShots) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t classes = 2 + trial % 4, k = 1 + trial % 3, n = 3 + trial % 9;
    naive::Rows rows;
    std::vector<std::uint32_t> labels;
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t j = 0; j < k; ++j) {
        rows.push_back(naive::randomUnit(rng, n));
        labels.push_back(static_cast<std::uint32_t>(c));
      }
    }
    const auto got = computeChannelStats({testing_support::toMatrix(rows), labels, classes});
    const auto want = naive::channelStats(rows, labels, classes);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(got.similarity[i], want.s[i], 1e-12);
      EXPECT_NEAR(got.variance[i], want.v[i], 1e-12);
    }
  }
}

TEST(ChannelStats, Errors) {
  const LabeledEmbeddings one{EmbeddingMatrix(1, 2, {1.f, 0.f}), {0}, 1};
  EXPECT_THROW(
      {
        try {
          computeChannelStats(one);
        } catch (const Error& e) {
          EXPECT_EQ(e.kind(), ErrorKind::SingleClass);
          throw;
        }
      },
      Error);
  const LabeledEmbeddings empty{EmbeddingMatrix(0, 2, {}), {}, 2};
  try {
    computeChannelStats(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyShots);
  }
}

TEST(ChannelStats, ReweightMatchesRecompute) {
  std::mt19937_64 rng(8);
  naive::Rows rows;
  for (int i = 0; i < 3; ++i) rows.push_back(naive::randomUnit(rng, 5));
  const auto shots = prototypes(rows);
  SelectorConfig a, b;
  b.lambda = 0.2;
  const auto direct = computeChannelStats(shots, b);
  const auto moved = reweight(computeChannelStats(shots, a), b);
  EXPECT_EQ(direct.importance, moved.importance);
}

TEST(Partition, RanksBySmallestImportance) {
  const auto p = partitionChannels(fromImportance({0.1, 0.9, 0.2, 0.8}), withQ(2));
  EXPECT_EQ(p.positive, (ChannelList{0, 2}));
  EXPECT_EQ(p.negative, (ChannelList{1, 3}));
}

TEST(Partition, TiesGoToLowerIndex) {
  const auto p = partitionChannels(fromImportance({0.5, 0.5, 0.5, 0.5}), withQ(2));
  EXPECT_EQ(p.positive, (ChannelList{0, 1}));
}

TEST(Partition, QOneBelowNLeavesArgmax) {
  const auto p = partitionChannels(fromImportance({0.3, 0.7, 0.9, 0.1, 0.2}), withQ(4));
  EXPECT_EQ(p.negative, (ChannelList{2}));
}

TEST(Partition, DefaultQIsHalf) {
  const auto p = partitionChannels(fromImportance({4, 3, 2, 1, 0}), {});
  EXPECT_EQ(p.q, 2u);
  EXPECT_EQ(p.positive, (ChannelList{3, 4}));
}

TEST(Partition, RejectsBadQAndLambda) {
  EXPECT_THROW(partitionChannels(fromImportance({1, 2}), withQ(0)), Error);
  EXPECT_THROW(partitionChannels(fromImportance({1, 2}), withQ(2)), Error);
  SelectorConfig cfg;
  cfg.lambda = 1.5;
  EXPECT_THROW(cfg.validate(4), Error);
}

TEST(Partition, PropertiesOnRandomVectors) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> nD(2, 40);
  std::uniform_int_distribution<int> coarse(0, 4);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = nD(rng);
    std::vector<double> f(n);
    // coarse values force plenty of ties
    for (double& x : f) x = coarse(rng) * 0.25;
    const std::size_t q = std::uniform_int_distribution<std::size_t>(1, n - 1)(rng);
    const auto p = partitionChannels(fromImportance(f), withQ(q));
    ASSERT_NO_THROW(p.validate());
    ChannelList pos, neg;
    naive::partition(f, q, pos, neg);
    EXPECT_EQ(p.positive, pos);
    EXPECT_EQ(p.negative, neg);

    // permuting the channels permutes the partition
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[perm[i]] = f[i] + 1e-6 * static_cast<double>(i);
    std::vector<double> fDistinct(n);
    for (std::size_t i = 0; i < n; ++i) fDistinct[i] = f[i] + 1e-6 * static_cast<double>(i);
    const auto a = partitionChannels(fromImportance(fDistinct), withQ(q));
    const auto b = partitionChannels(fromImportance(g), withQ(q));
    ChannelList mapped;
    for (std::size_t i : a.positive) mapped.push_back(perm[i]);
    std::sort(mapped.begin(), mapped.end());
    EXPECT_EQ(mapped, b.positive);
  }
}

TEST(PartitionFile, SerializeParseRoundTrip) {
  const ChannelPartition p{{0, 2, 5}, {1, 3, 4}, 3};
  EXPECT_EQ(p.serialize(), "Q=3\n0 2 5\n1 3 4\n");
  EXPECT_EQ(ChannelPartition::parse(p.serialize()), p);
  EXPECT_EQ(p.hash(), ChannelPartition::parse(p.serialize()).hash());
  const ChannelPartition other{{0, 2, 4}, {1, 3, 5}, 3};
  EXPECT_NE(p.hash(), other.hash());
  testing_support::TempDir dir("part");
  savePartition(dir / "p.txt", p);
  EXPECT_EQ(loadPartition(dir / "p.txt"), p);
}

TEST(PartitionFile, RejectsOverlapAndGaps) {
  EXPECT_THROW(ChannelPartition::parse("Q=2\n0 1\n1 2\n"), Error);
  EXPECT_THROW(ChannelPartition::parse("Q=2\n0 1\n3\n"), Error);
  EXPECT_THROW(ChannelPartition::parse("Q=1\n0 1\n2\n"), Error);
  EXPECT_THROW(ChannelPartition::parse("nope\n"), Error);
  EXPECT_THROW(ChannelPartition::parse("Q=1\n0 x\n1\n"), Error);
}

TEST(RestrictChannels, Indexing) {
  const EmbeddingMatrix m(1, 4, {5.f, 6.f, 7.f, 8.f});
  const auto r = restrictChannels(m, {0, 2});
  EXPECT_EQ(r.values(), (std::vector<float>{5.f, 7.f}));
  EXPECT_EQ(restrictChannels(m, {0, 1, 2, 3}), m);
  try {
    restrictChannels(m, {7});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IndexOutOfRange);
  }
}

TEST(AvgPool, PairwiseMeans) {
  EXPECT_EQ(avgPoolPairs(EmbeddingMatrix(1, 4, {2.f, 4.f, 6.f, 8.f})).values(),
            (std::vector<float>{3.f, 7.f}));
  EXPECT_EQ(avgPoolPairs(EmbeddingMatrix(1, 6, std::vector<float>(6, 0.3f))).values(),
            (std::vector<float>(3, 0.3f)));
  try {
    avgPoolPairs(EmbeddingMatrix(1, 3, {1.f, 2.f, 3.f}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OddDimension);
  }
}

TEST(CriterionMode, Strings) {
  EXPECT_EQ(parseCriterionMode("paper-literal"), CriterionMode::PaperLiteral);
  EXPECT_EQ(parseCriterionMode(to_string(CriterionMode::VarianceNegated)),
            CriterionMode::VarianceNegated);
  EXPECT_THROW(parseCriterionMode("other"), Error);
}
