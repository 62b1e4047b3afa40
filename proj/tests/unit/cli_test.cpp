#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bridge.hpp"
#include "commands.hpp"
#include "dualcache/error.hpp"
#include "dualcache/synthetic.hpp"
#include "fixture_writer.hpp"

using namespace dualcache;
using namespace dualcache::cli;
using testing_support::TempDir;

namespace {

const std::filesystem::path kFixture = DUALCACHE_FIXTURE_DIR;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int runCli(const std::string& args) {
  const std::string cmd = std::string(DUALCACHE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// A compact manifest for fast tests: small fixture written to a temp dir.
std::filesystem::path smallManifest(const TempDir& dir, const std::string& extra) {
  SyntheticSpec spec;
  spec.testPerClass = 30;
  spec.oodCount = 40;
  spec.trainPerClass = 8;
  return writeBundle(dir.path(), "toy", makeClusterFixture(spec), extra);
}

}  // namespace

TEST(Manifest, ParsesDefaultsAndResolvesPaths) {
  const auto m = parseManifest(kFixture / "manifest.json");
  EXPECT_EQ(m.shots, 16u);
  EXPECT_EQ(m.seeds.size(), 5u);
  EXPECT_EQ(m.idTrainEmbeddings, kFixture / "synthetic.train.emb");
  EXPECT_EQ(m.modes.size(), 4u);
  EXPECT_EQ(m.grid.size(), 75u);
  EXPECT_TRUE(m.warnings.empty());
  EXPECT_NO_THROW(checkFilesExist(m));
}

TEST(Manifest, MinimalTextGetsDefaults) {
  const auto m = parseManifestText(R"({
    "id_train": {"embeddings": "a.emb", "labels": "a.lbl"},
    "id_test": {"embeddings": "b.emb", "labels": "b.lbl"},
    "ood_test": [{"name": "x", "embeddings": "/abs/x.emb"}],
    "vocabulary": "v.txt",
    "text": {"dataset": "d", "positive": "p.tsv", "negative": "n.tsv"}
  })",
                                   "/base");
  EXPECT_EQ(m.idTrainEmbeddings, std::filesystem::path("/base/a.emb"));
  EXPECT_EQ(m.oodTest[0].embeddings, std::filesystem::path("/abs/x.emb"));
  EXPECT_EQ(m.textDir, std::filesystem::path("/base"));
  EXPECT_EQ(m.adapter.alpha, 1.0);
  EXPECT_EQ(m.adapter.beta, 5.5);
  EXPECT_EQ(m.modes, std::vector<AdapterMode>{AdapterMode::Dual});
  EXPECT_EQ(m.grid.size(), 1u);
  EXPECT_EQ(m.tuningSet, TuningSet::ValidationSplit);
}

TEST(Manifest, Errors) {
  try {
    parseManifestText(R"({"id_train": {}})", "/");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ManifestError);
  }
  EXPECT_THROW(parseManifestText("{not json", "/"), Error);
  EXPECT_THROW(parseManifest("/definitely/missing.json"), Error);
}

TEST(Manifest, OutOfRangeGridWarnsButParses) {
  TempDir dir("warn");
  const auto path = smallManifest(dir, R"({"sweep": {"alphas": [45]}})");
  const auto m = parseManifest(path);
  ASSERT_EQ(m.warnings.size(), 1u);
  EXPECT_NE(m.warnings[0].find("alpha"), std::string::npos);
}

TEST(Cli, SelectChannelsWritesPartitionAndStats) {
  TempDir dir("sel");
  const auto m = parseManifest(smallManifest(dir, R"({"shots": 4})"));
  const auto written = cmdSelectChannels(m, {});
  ASSERT_EQ(written.size(), 2u);
  const auto p = loadPartition(written[0]);
  EXPECT_EQ(p.q, 16u);
  EXPECT_EQ(p.channels(), 32u);
  const auto stats = slurp(written[1]);
  EXPECT_EQ(stats.substr(0, 14), "channel\tS\tV\tF\n");
  EXPECT_EQ(std::count(stats.begin(), stats.end(), '\n'), 33);
}

TEST(Cli, LambdaOneRanksBySimilarity) {
  TempDir dir("lam");
  const auto m = parseManifest(smallManifest(dir, R"({"shots": 4, "selector": {"lambda": 1}})"));
  const auto written = cmdSelectChannels(m, {});
  const auto p = loadPartition(written[0]);
  std::istringstream in(slurp(written[1]));
  std::string line;
  std::getline(in, line);
  std::vector<double> s;
  std::size_t i;
  double si, vi, fi;
  while (in >> i >> si >> vi >> fi) {
    s.push_back(si);
    EXPECT_EQ(fi, si);
  }
  double maxPos = -1e300, minNeg = 1e300;
  for (std::size_t c : p.positive) maxPos = std::max(maxPos, s[c]);
  for (std::size_t c : p.negative) minNeg = std::min(minNeg, s[c]);
  EXPECT_LE(maxPos, minNeg);
}

TEST(Cli, BuildCacheAndScore) {
  TempDir dir("score");
  const auto m = parseManifest(smallManifest(dir, R"({"shots": 4, "dump_logits": true})"));
  const auto caches = cmdBuildCache(m, {});
  EXPECT_EQ(caches.size(), 7u);
  CacheMetadata meta;
  const auto pos = loadCache(dir.path() / "out" / "positive_cache", &meta);
  EXPECT_EQ(pos.entries(), 8u);
  EXPECT_EQ(meta.partitionHash, loadPartition(dir.path() / "out" / "partition.txt").hash());

  const auto scores = cmdScore(m, {});
  ASSERT_EQ(scores.size(), 4u);
  const auto id = slurp(dir.path() / "out" / "scores.id.tsv");
  EXPECT_EQ(std::count(id.begin(), id.end(), '\n'), 61);
  const auto logits = loadEmbeddings(dir.path() / "out" / "logits.far-cluster.emb");
  EXPECT_EQ(logits.rows(), 40u);
  EXPECT_EQ(logits.dim(), 4u);
}

TEST(Cli, ScoreUsesSuppliedPartition) {
  TempDir dir("given");
  const auto path = smallManifest(dir, R"({"shots": 4, "partition": "given.txt"})");
  ChannelPartition p;
  for (std::size_t i = 0; i < 32; ++i) (i % 2 ? p.negative : p.positive).push_back(i);
  p.q = 16;
  savePartition(dir / "given.txt", p);
  const auto m = parseManifest(path);
  cmdBuildCache(m, {});
  EXPECT_EQ(loadPartition(dir.path() / "out" / "partition.txt"), p);
}

TEST(Cli, EvalProducesLabeledModeRows) {
  TempDir dir("eval");
  const auto m = parseManifest(
      smallManifest(dir, R"({"shots": 4, "seeds": [1, 2], "modes": ["positive-only", "dual"]})"));
  cmdEval(m, {});
  const auto results = slurp(dir.path() / "out" / "results.tsv");
  EXPECT_EQ(results.substr(0, results.find('\n')),
            "dataset\tK\tseed\talpha\tbeta\ttau\tlambda\tmode\tFPR95\tAUROC");
  EXPECT_NE(results.find("\tpositive-only\t"), std::string::npos);
  EXPECT_NE(results.find("\tdual\t"), std::string::npos);
  // 2 modes x (2 seeds + 1 mean + 1 average) + header
  EXPECT_EQ(std::count(results.begin(), results.end(), '\n'), 9);
  const auto summary = slurp(dir.path() / "out" / "summary.txt");
  EXPECT_NE(summary.find("Average AUROC"), std::string::npos);
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 3);
}

TEST(Cli, ModeOverride) {
  TempDir dir("mode");
  CommandOptions opts;
  opts.mode = AdapterMode::McmBaseline;
  const auto m = applyOverrides(parseManifest(smallManifest(dir, R"({"shots": 4, "seeds": [1]})")), opts);
  cmdEval(m, opts);
  const auto results = slurp(dir.path() / "out" / "results.tsv");
  EXPECT_NE(results.find("mcm-baseline"), std::string::npos);
  EXPECT_EQ(results.find("\tdual\t"), std::string::npos);
}

TEST(Cli, SweepSingletonAndCleanLabel) {
  TempDir dir("sweep");
  const auto m = parseManifest(smallManifest(dir, R"({"shots": 4})"));
  cmdSweep(m, {});
  const auto grid = slurp(dir.path() / "out" / "sweep.tsv");
  EXPECT_EQ(std::count(grid.begin(), grid.end(), '\n'), 2);
  const auto best = slurp(dir.path() / "out" / "best.txt");
  EXPECT_EQ(best.substr(0, 12), "label\tclean\n");
}

TEST(Cli, SweepOutsideRangeStillRuns) {
  TempDir dir("wide");
  const auto m = parseManifest(smallManifest(
      dir, R"({"shots": 4, "sweep": {"alphas": [0, 40], "tuning_set": "paper-faithful-test"}})"));
  std::ostringstream log;
  CommandOptions opts;
  opts.log = &log;
  cmdSweep(m, opts);
  EXPECT_NE(log.str().find("warning"), std::string::npos);
  const auto best = slurp(dir.path() / "out" / "best.txt");
  EXPECT_EQ(best.substr(0, 17), "label\ttest-tuned\n");
}

TEST(Cli, ValidateReportsShapes) {
  std::ostringstream out;
  cmdValidate(parseManifest(kFixture / "manifest.json"), {}, out);
  EXPECT_NE(out.str().find("dim\t32"), std::string::npos);
}

TEST(CliBinary, ExitCodes) {
  TempDir dir("exit");
  const auto manifest = (kFixture / "manifest.json").string();
  EXPECT_EQ(runCli("--manifest " + manifest + " validate"), 0);
  EXPECT_EQ(runCli("--manifest " + (dir / "missing.json").string() + " eval"), 2);
  EXPECT_EQ(runCli("--manifest " + manifest + " --mode nonsense eval"), 2);
  EXPECT_EQ(runCli("--manifest " + manifest), 2);

  // a manifest whose data file is missing names that file
  const auto path = smallManifest(dir, "{}");
  std::filesystem::remove(dir / "toy.test.emb");
  const std::string cmd = std::string(DUALCACHE_CLI_PATH) + " --manifest " + path.string() +
                          " select-channels 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string output;
  char buf[256];
  while (fgets(buf, sizeof buf, pipe)) output += buf;
  const int status = pclose(pipe);
  EXPECT_EQ(WEXITSTATUS(status), 2);
  EXPECT_NE(output.find("toy.test.emb"), std::string::npos) << output;
}

TEST(CliBinary, ThreadsEnvAndOutFlag) {
  TempDir dir("env");
  const auto manifest = (kFixture / "manifest.json").string();
  const std::string base = "--manifest " + manifest + " --mode dual";
  ASSERT_EQ(runCli(base + " --threads 1 --out " + (dir / "a").string() + " eval"), 0);
  ASSERT_EQ(runCli(base + " --threads 4 --out " + (dir / "b").string() + " eval"), 0);
  setenv("DUALCACHE_THREADS", "3", 1);
  ASSERT_EQ(runCli(base + " --threads 1 --out " + (dir / "c").string() + " eval"), 0);
  setenv("DUALCACHE_THREADS", "zero", 1);
  EXPECT_EQ(runCli(base + " --out " + (dir / "d").string() + " eval"), 2);
  unsetenv("DUALCACHE_THREADS");
  const auto a = slurp(dir / "a" / "results.tsv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b" / "results.tsv"));
  EXPECT_EQ(a, slurp(dir / "c" / "results.tsv"));
}
