#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dualcache/adapter.hpp"
#include "dualcache/channel_selector.hpp"
#include "dualcache/embedding_store.hpp"

namespace dualcache {

// Mann-Whitney estimate of P(id > ood) with half credit for ties. ID is the
// positive class and higher scores mean more in-distribution.
double auroc(std::span<const double> idScores, std::span<const double> oodScores);

// False positive rate at the largest threshold t that still accepts at least
// `tpr` of the ID scores (score >= t counts as accepted).
double fprAtTpr(std::span<const double> idScores, std::span<const double> oodScores,
                double tpr = 0.95);

struct EvalResult {
  double auroc = 0.0;
  double fpr95 = 0.0;
  std::size_t idCount = 0;
  std::size_t oodCount = 0;
  AdapterConfig config;
  SelectorConfig selector;
  std::uint64_t seed = 0;
  std::size_t shots = 0;
  std::size_t runs = 1;  // number of seeds averaged into this row
  std::string datasetName;
};

struct ProtocolReport {
  std::vector<EvalResult> runs;        // one per (seed, OOD set), seed-major
  std::vector<EvalResult> perDataset;  // seed-averaged, in OOD-set order
  EvalResult average;                  // mean over perDataset
};

struct EvalOptions {
  std::size_t threads = 1;
};

// Scores the ID test set and every OOD set with one engine.
std::vector<EvalResult> evaluateEngine(const DualEngine& engine, const EmbeddingMatrix& idTest,
                                       std::span<const NamedEmbeddings> oodSets,
                                       const EvalOptions& options = {});

EvalResult averageResults(std::span<const EvalResult> results, const std::string& name);

// Per seed: sample K shots, select channels, assemble the engine and score
// every test set. Results are averaged over seeds per OOD set.
ProtocolReport runProtocol(const DatasetBundle& bundle, std::size_t shots,
                           std::span<const std::uint64_t> seeds, const AdapterConfig& adapter,
                           const SelectorConfig& selector, const EvalOptions& options = {});

struct SweepGrid {
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<double> taus;
  std::vector<double> lambdas;

  std::size_t size() const noexcept {
    return alphas.size() * betas.size() * taus.size() * lambdas.size();
  }
  // Throws on empty axes or values outside hard limits.
  void validate() const;
  // False when any value leaves the customary search box; callers warn.
  bool withinSearchRanges() const noexcept;
};

enum class Objective { Auroc, Fpr95 };

enum class TuningSet {
  // Tune on a seeded 20% slice of every test set, report on the other 80%.
  ValidationSplit,
  // Tune and report on the full test sets.
  PaperFaithfulTest,
};

const char* to_string(Objective objective) noexcept;
const char* to_string(TuningSet set) noexcept;
// "clean" for the validation split, "test-tuned" otherwise.
const char* tuningLabel(TuningSet set) noexcept;
Objective parseObjective(const std::string& text);
TuningSet parseTuningSet(const std::string& text);

struct SweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  double tau = 0.0;
  double lambda = 0.0;
  double auroc = 0.0;  // mean over OOD sets on the tuning data
  double fpr95 = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // alpha-major, then beta, tau, lambda (grid order)
  std::size_t best = 0;
  AdapterConfig bestAdapter;
  SelectorConfig bestSelector;
  Objective objective = Objective::Auroc;
  TuningSet tuningSet = TuningSet::ValidationSplit;
  std::vector<EvalResult> report;  // best point on the reporting data, per OOD set
  EvalResult reportAverage;
};

struct DataSplit {
  EmbeddingMatrix tune;
  EmbeddingMatrix report;
};

// Seeded 20/80 row split; the tuning slice holds floor(rows/5) rows (>= 1).
DataSplit splitForValidation(const EmbeddingMatrix& m, std::uint64_t seed);

SweepResult sweep(const DatasetBundle& bundle, const SweepGrid& grid, std::size_t shots,
                  std::uint64_t seed, Objective objective, TuningSet tuningSet,
                  const AdapterConfig& base, const SelectorConfig& baseSelector,
                  const EvalOptions& options = {});

}  // namespace dualcache
