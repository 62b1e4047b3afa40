#include "dualcache/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "dualcache/error.hpp"
#include "dualcache/parallel.hpp"
#include "dualcache/random.hpp"

namespace dualcache {

namespace {

void requireScores(std::span<const double> scores, const char* what) {
  if (scores.empty()) throw Error(ErrorKind::EmptyList, std::string(what) + " scores are empty");
  for (double s : scores) {
    if (std::isnan(s)) throw Error(ErrorKind::NonFiniteValue, std::string(what) + " score is NaN");
  }
}

// splitmix64 finalizer; gives each derived stream an unrelated seed.
std::uint64_t mixSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

double auroc(std::span<const double> idScores, std::span<const double> oodScores) {
  requireScores(idScores, "ID");
  requireScores(oodScores, "OOD");
  std::vector<double> ood(oodScores.begin(), oodScores.end());
  std::sort(ood.begin(), ood.end());
  // Twice the Mann-Whitney U, kept integral so ties cost no precision.
  std::uint64_t twiceU = 0;
  for (double s : idScores) {
    const auto lo = std::lower_bound(ood.begin(), ood.end(), s);
    const auto hi = std::upper_bound(lo, ood.end(), s);
    twiceU += 2 * static_cast<std::uint64_t>(lo - ood.begin()) +
              static_cast<std::uint64_t>(hi - lo);
  }
  const double pairs = static_cast<double>(idScores.size()) * static_cast<double>(ood.size());
  return static_cast<double>(twiceU) / (2.0 * pairs);
}

double fprAtTpr(std::span<const double> idScores, std::span<const double> oodScores,
                double tpr) {
  requireScores(idScores, "ID");
  requireScores(oodScores, "OOD");
  if (!(tpr > 0.0 && tpr <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "tpr must lie in (0, 1]");
  }
  std::vector<double> id(idScores.begin(), idScores.end());
  std::sort(id.begin(), id.end(), std::greater<>());
  const double n = static_cast<double>(id.size());
  // Number of ID scores that must clear the threshold; the epsilon absorbs
  // representation error such as 0.95 * 100 = 94.999...
  auto needed = static_cast<std::size_t>(std::ceil(tpr * n - 1e-9));
  needed = std::clamp<std::size_t>(needed, 1, id.size());
  const double threshold = id[needed - 1];
  const auto accepted = std::count_if(oodScores.begin(), oodScores.end(),
                                      [threshold](double s) { return s >= threshold; });
  return static_cast<double>(accepted) / static_cast<double>(oodScores.size());
}

std::vector<EvalResult> evaluateEngine(const DualEngine& engine, const EmbeddingMatrix& idTest,
                                       std::span<const NamedEmbeddings> oodSets,
                                       const EvalOptions& options) {
  const auto idScores = engine.oodScores(idTest, options.threads);
  std::vector<EvalResult> out;
  out.reserve(oodSets.size());
  for (const auto& ood : oodSets) {
    const auto oodScores = engine.oodScores(ood.embeddings, options.threads);
    EvalResult r;
    r.auroc = auroc(idScores, oodScores);
    r.fpr95 = fprAtTpr(idScores, oodScores, 0.95);
    r.idCount = idScores.size();
    r.oodCount = oodScores.size();
    r.config = engine.config();
    r.datasetName = ood.name;
    out.push_back(std::move(r));
  }
  return out;
}

EvalResult averageResults(std::span<const EvalResult> results, const std::string& name) {
  if (results.empty()) throw Error(ErrorKind::EmptyList, "nothing to average");
  EvalResult avg = results.front();
  avg.datasetName = name;
  double aurocSum = 0.0;
  double fprSum = 0.0;
  std::size_t oodTotal = 0;
  for (const auto& r : results) {
    aurocSum += r.auroc;
    fprSum += r.fpr95;
    oodTotal += r.oodCount;
  }
  const double n = static_cast<double>(results.size());
  avg.auroc = aurocSum / n;
  avg.fpr95 = fprSum / n;
  avg.oodCount = oodTotal / results.size();
  return avg;
}

ProtocolReport runProtocol(const DatasetBundle& bundle, std::size_t shots,
                           std::span<const std::uint64_t> seeds, const AdapterConfig& adapter,
                           const SelectorConfig& selector, const EvalOptions& options) {
  bundle.validate();
  if (seeds.empty()) throw Error(ErrorKind::EmptyList, "protocol needs at least one seed");
  if (bundle.oodTest.empty()) throw Error(ErrorKind::EmptyList, "bundle has no OOD test sets");
  adapter.validate();
  selector.validate(bundle.dim());

  ProtocolReport report;
  for (std::uint64_t seed : seeds) {
    const LabeledEmbeddings sampled = sampleShots(bundle.idTrain, shots, seed);
    const ChannelStats stats = computeChannelStats(sampled, selector);
    const ChannelPartition partition = partitionChannels(stats, selector);
    const DualEngine engine = DualEngine::assemble(sampled, bundle.positiveText,
                                                   bundle.negativeText, partition, adapter);
    for (auto& r : evaluateEngine(engine, bundle.idTest.embeddings, bundle.oodTest, options)) {
      r.seed = seed;
      r.shots = shots;
      r.selector = selector;
      report.runs.push_back(std::move(r));
    }
  }

  const std::size_t sets = bundle.oodTest.size();
  for (std::size_t d = 0; d < sets; ++d) {
    std::vector<EvalResult> perSeed;
    for (std::size_t s = 0; s < seeds.size(); ++s) perSeed.push_back(report.runs[s * sets + d]);
    EvalResult mean = averageResults(perSeed, bundle.oodTest[d].name);
    mean.runs = seeds.size();
    report.perDataset.push_back(std::move(mean));
  }
  report.average = averageResults(report.perDataset, "Average");
  return report;
}

void SweepGrid::validate() const {
  if (alphas.empty() || betas.empty() || taus.empty() || lambdas.empty()) {
    throw Error(ErrorKind::EmptyList, "every sweep axis needs at least one value");
  }
  for (double a : alphas) AdapterConfig{a, 0.0, 1.0}.validate();
  for (double b : betas) AdapterConfig{0.0, b, 1.0}.validate();
  for (double t : taus) AdapterConfig{0.0, 0.0, t}.validate();
  for (double l : lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "lambda " + std::to_string(l) + " outside [0,1]");
    }
  }
}

bool SweepGrid::withinSearchRanges() const noexcept {
  auto inBox = [](const std::vector<double>& v, double lo, double hi) {
    return std::all_of(v.begin(), v.end(), [=](double x) { return x >= lo && x <= hi; });
  };
  return inBox(alphas, 0.0, AdapterConfig::kMaxResidual) &&
         inBox(betas, 0.0, AdapterConfig::kMaxResidual) &&
         inBox(taus, AdapterConfig::kMinTau, AdapterConfig::kMaxTau);
}

const char* to_string(Objective objective) noexcept {
  return objective == Objective::Auroc ? "auroc" : "fpr95";
}

const char* to_string(TuningSet set) noexcept {
  return set == TuningSet::ValidationSplit ? "validation-split" : "paper-faithful-test";
}

const char* tuningLabel(TuningSet set) noexcept {
  return set == TuningSet::ValidationSplit ? "clean" : "test-tuned";
}

Objective parseObjective(const std::string& text) {
  if (text == "auroc") return Objective::Auroc;
  if (text == "fpr95") return Objective::Fpr95;
  throw Error(ErrorKind::InvalidArgument, "unknown objective '" + text + "'");
}

TuningSet parseTuningSet(const std::string& text) {
  if (text == "validation-split") return TuningSet::ValidationSplit;
  if (text == "paper-faithful-test") return TuningSet::PaperFaithfulTest;
  throw Error(ErrorKind::InvalidArgument, "unknown tuning set '" + text + "'");
}

DataSplit splitForValidation(const EmbeddingMatrix& m, std::uint64_t seed) {
  if (m.rows() < 2) {
    throw Error(ErrorKind::InvalidArgument, "validation split needs at least 2 rows");
  }
  std::vector<std::size_t> order(m.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span<std::size_t>(order), rng);
  const std::size_t tuneRows = std::max<std::size_t>(1, m.rows() / 5);
  std::vector<std::size_t> tune(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(tuneRows));
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(tuneRows), order.end());
  std::sort(tune.begin(), tune.end());
  std::sort(rest.begin(), rest.end());
  return {selectRows(m, tune), selectRows(m, rest)};
}

SweepResult sweep(const DatasetBundle& bundle, const SweepGrid& grid, std::size_t shots,
                  std::uint64_t seed, Objective objective, TuningSet tuningSet,
                  const AdapterConfig& base, const SelectorConfig& baseSelector,
                  const EvalOptions& options) {
  bundle.validate();
  grid.validate();
  base.validate();
  if (bundle.oodTest.empty()) throw Error(ErrorKind::EmptyList, "bundle has no OOD test sets");

  EmbeddingMatrix tuneId = bundle.idTest.embeddings;
  EmbeddingMatrix reportId = bundle.idTest.embeddings;
  std::vector<NamedEmbeddings> tuneOod = bundle.oodTest;
  std::vector<NamedEmbeddings> reportOod = bundle.oodTest;
  if (tuningSet == TuningSet::ValidationSplit) {
    auto split = splitForValidation(bundle.idTest.embeddings, mixSeed(seed, 0));
    tuneId = std::move(split.tune);
    reportId = std::move(split.report);
    for (std::size_t d = 0; d < bundle.oodTest.size(); ++d) {
      auto s = splitForValidation(bundle.oodTest[d].embeddings, mixSeed(seed, d + 1));
      tuneOod[d].embeddings = std::move(s.tune);
      reportOod[d].embeddings = std::move(s.report);
    }
  }

  const LabeledEmbeddings sampled = sampleShots(bundle.idTrain, shots, seed);
  const ChannelStats stats = computeChannelStats(sampled, baseSelector);

  std::vector<SelectorConfig> selectors;
  std::vector<DualEngine> engines;
  for (double lambda : grid.lambdas) {
    SelectorConfig sel = baseSelector;
    sel.lambda = lambda;
    sel.validate(bundle.dim());
    const ChannelPartition partition = partitionChannels(reweight(stats, sel), sel);
    engines.push_back(DualEngine::assemble(sampled, bundle.positiveText, bundle.negativeText,
                                           partition, base));
    selectors.push_back(sel);
  }

  struct Point {
    std::size_t lambdaIndex;
    AdapterConfig config;
  };
  std::vector<Point> points;
  points.reserve(grid.size());
  for (double a : grid.alphas) {
    for (double b : grid.betas) {
      for (double t : grid.taus) {
        for (std::size_t l = 0; l < grid.lambdas.size(); ++l) {
          AdapterConfig cfg = base;
          cfg.alpha = a;
          cfg.beta = b;
          cfg.tau = t;
          points.push_back({l, cfg});
        }
      }
    }
  }

  SweepResult result;
  result.objective = objective;
  result.tuningSet = tuningSet;
  result.rows.resize(points.size());
  parallelFor(points.size(), options.threads, [&](std::size_t i) {
    const Point& p = points[i];
    const DualEngine engine = engines[p.lambdaIndex].withConfig(p.config);
    const auto perSet = evaluateEngine(engine, tuneId, tuneOod, {1});
    const EvalResult avg = averageResults(perSet, "Average");
    result.rows[i] = {p.config.alpha, p.config.beta, p.config.tau,
                      grid.lambdas[p.lambdaIndex], avg.auroc, avg.fpr95};
  });

  auto key = [](const SweepRow& r) { return std::tie(r.alpha, r.beta, r.tau, r.lambda); };
  auto better = [&](const SweepRow& a, const SweepRow& b) {
    const double va = objective == Objective::Auroc ? a.auroc : -a.fpr95;
    const double vb = objective == Objective::Auroc ? b.auroc : -b.fpr95;
    if (va != vb) return va > vb;
    return key(a) < key(b);
  };
  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    if (better(result.rows[i], result.rows[result.best])) result.best = i;
  }

  const Point& bestPoint = points[result.best];
  result.bestAdapter = bestPoint.config;
  result.bestSelector = selectors[bestPoint.lambdaIndex];
  const DualEngine bestEngine = engines[bestPoint.lambdaIndex].withConfig(bestPoint.config);
  result.report = evaluateEngine(bestEngine, reportId, reportOod, options);
  for (auto& r : result.report) {
    r.seed = seed;
    r.shots = shots;
    r.selector = result.bestSelector;
  }
  result.reportAverage = averageResults(result.report, "Average");
  return result;
}

}  // namespace dualcache
