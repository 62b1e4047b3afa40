#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "dualcache/cache_model.hpp"
#include "dualcache/error.hpp"

namespace dualcache::cli {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string g9(double v) { return fmt("%.9g", v); }

void writeText(const std::filesystem::path& path, const std::string& text, Outputs& written) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  written.push_back(path);
}

void note(const CommandOptions& options, const std::string& line) {
  if (options.log) *options.log << line << '\n';
}

void announceWarnings(const RunManifest& m, const CommandOptions& options) {
  for (const auto& w : m.warnings) note(options, "warning: " + w);
}

std::filesystem::path prepareOutputDir(const RunManifest& m) {
  std::error_code ec;
  std::filesystem::create_directories(m.outputDir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + m.outputDir.string() + ": " + ec.message());
  return m.outputDir;
}

ChannelPartition partitionFor(const RunManifest& m, const LabeledEmbeddings& shots) {
  if (m.partition) {
    ChannelPartition p = loadPartition(*m.partition);
    if (p.channels() != shots.embeddings.dim()) {
      throw Error(ErrorKind::DimensionMismatch,
                  m.partition->string() + ": partition covers " + std::to_string(p.channels()) +
                      " channels, embeddings have " + std::to_string(shots.embeddings.dim()));
    }
    return p;
  }
  return partitionChannels(computeChannelStats(shots, m.selector), m.selector);
}

std::string safeName(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (c == '/' || c == '\\' || c == '\t' || c == ' ') c = '_';
  }
  return out;
}

}  // namespace

RunManifest applyOverrides(RunManifest m, const CommandOptions& options) {
  if (options.out) m.outputDir = *options.out;
  if (options.mode) {
    m.adapter.mode = *options.mode;
    m.modes = {*options.mode};
  }
  return m;
}

Outputs cmdValidate(const RunManifest& m, const CommandOptions& options, std::ostream& out) {
  announceWarnings(m, options);
  const DatasetBundle b = loadBundle(m);
  m.selector.validate(b.dim());
  if (m.partition) {
    const ChannelPartition p = loadPartition(*m.partition);
    if (p.channels() != b.dim()) {
      throw Error(ErrorKind::DimensionMismatch, m.partition->string() + ": partition size differs from dim");
    }
  }
  for (std::size_t c = 0; c < b.idTrain.classCount; ++c) {
    std::size_t have = 0;
    for (auto l : b.idTrain.labels) have += (l == c);
    if (have < m.shots) {
      throw Error(ErrorKind::InsufficientShots, "class " + b.vocab.names[c] + " has " +
                                                    std::to_string(have) + " training rows, K=" +
                                                    std::to_string(m.shots));
    }
  }
  out << "manifest ok\n"
      << "classes\t" << b.vocab.classCount() << "\n"
      << "dim\t" << b.dim() << "\n"
      << "id_train\t" << b.idTrain.size() << "\n"
      << "id_test\t" << b.idTest.size() << "\n";
  for (const auto& ood : b.oodTest) out << "ood\t" << ood.name << "\t" << ood.embeddings.rows() << "\n";
  out << "positive_templates\t" << b.positiveText.templates.size() << "\n"
      << "negative_templates\t" << b.negativeText.templates.size() << "\n"
      << "grid_points\t" << m.grid.size() << "\n";
  return {};
}

Outputs cmdSelectChannels(const RunManifest& m, const CommandOptions& options) {
  announceWarnings(m, options);
  const DatasetBundle b = loadBundle(m);
  const auto dir = prepareOutputDir(m);
  const LabeledEmbeddings shots = sampleShots(b.idTrain, m.shots, m.seeds.front());
  const ChannelStats stats = computeChannelStats(shots, m.selector);
  const ChannelPartition p = partitionChannels(stats, m.selector);

  Outputs written;
  std::ostringstream table;
  table << "channel\tS\tV\tF\n";
  for (std::size_t i = 0; i < stats.size(); ++i) {
    table << i << '\t' << g9(stats.similarity[i]) << '\t' << g9(stats.variance[i]) << '\t'
          << g9(stats.importance[i]) << '\n';
  }
  writeText(dir / "partition.txt", p.serialize(), written);
  writeText(dir / "channel_stats.tsv", table.str(), written);
  note(options, "selected " + std::to_string(p.q) + " of " + std::to_string(p.channels()) + " channels");
  return written;
}

Outputs cmdBuildCache(const RunManifest& m, const CommandOptions& options) {
  announceWarnings(m, options);
  const DatasetBundle b = loadBundle(m);
  const auto dir = prepareOutputDir(m);
  const LabeledEmbeddings shots = sampleShots(b.idTrain, m.shots, m.seeds.front());
  const ChannelPartition p = partitionFor(m, shots);

  Outputs written;
  writeText(dir / "partition.txt", p.serialize(), written);
  const CacheMetadata meta{shots.classCount, m.shots, p.q, p.hash()};
  auto save = [&](const std::string& stem, const CacheModel& cache) {
    saveCache(dir / stem, cache, meta);
    for (const char* ext : {".keys.emb", ".onehot.emb", ".meta.txt"}) written.push_back(dir / (stem + ext));
  };
  if (m.adapter.pooling == Pooling::AvgPool) {
    save("pooled_cache",
         buildCacheFromProjected({avgPoolPairs(shots.embeddings), shots.labels, shots.classCount}));
  } else {
    save("positive_cache", buildCache(shots, p.positive));
    save("negative_cache", buildCache(shots, p.negative));
  }
  return written;
}

Outputs cmdScore(const RunManifest& m, const CommandOptions& options) {
  announceWarnings(m, options);
  const DatasetBundle b = loadBundle(m);
  const auto dir = prepareOutputDir(m);
  const LabeledEmbeddings shots = sampleShots(b.idTrain, m.shots, m.seeds.front());
  const ChannelPartition p = partitionFor(m, shots);
  const DualEngine engine = DualEngine::assemble(shots, b.positiveText, b.negativeText, p, m.adapter);

  Outputs written;
  auto emit = [&](const std::string& name, const EmbeddingMatrix& features) {
    const auto records = engine.scoreBatch(features, options.threads);
    std::ostringstream table;
    table << "sample_id\tood_score\tpredicted_class\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
      table << i << '\t' << g9(records[i].oodScore) << '\t' << records[i].predictedClass << '\n';
    }
    writeText(dir / ("scores." + safeName(name) + ".tsv"), table.str(), written);
    if (!m.dumpLogits) return;
    const std::size_t c = b.vocab.classCount();
    std::vector<float> flat;
    flat.reserve(records.size() * 2 * c);
    for (const auto& r : records) {
      for (double v : r.positiveLogits) flat.push_back(static_cast<float>(v));
      for (double v : r.negativeLogits) flat.push_back(static_cast<float>(v));
    }
    const auto path = dir / ("logits." + safeName(name) + ".emb");
    saveEmbeddings(path, EmbeddingMatrix(records.size(), 2 * c, std::move(flat)));
    written.push_back(path);
  };
  emit("id", b.idTest.embeddings);
  for (const auto& ood : b.oodTest) emit(ood.name, ood.embeddings);
  return written;
}

Outputs cmdEval(const RunManifest& m, const CommandOptions& options) {
  announceWarnings(m, options);
  if (m.partition) note(options, "note: eval selects channels per seed; the partition file is not used");
  const DatasetBundle b = loadBundle(m);
  const auto dir = prepareOutputDir(m);

  std::ostringstream results;
  results << "dataset\tK\tseed\talpha\tbeta\ttau\tlambda\tmode\tFPR95\tAUROC\n";
  auto row = [&](const EvalResult& r, const std::string& seed) {
    results << r.datasetName << '\t' << r.shots << '\t' << seed << '\t' << g9(r.config.alpha) << '\t'
            << g9(r.config.beta) << '\t' << g9(r.config.tau) << '\t' << g9(r.selector.lambda) << '\t'
            << to_string(r.config.mode) << '\t' << fmt("%.6f", r.fpr95) << '\t'
            << fmt("%.6f", r.auroc) << '\n';
  };

  std::ostringstream summary;
  summary << "method";
  for (const auto& ood : b.oodTest) summary << '\t' << ood.name << " FPR95\t" << ood.name << " AUROC";
  summary << "\tAverage FPR95\tAverage AUROC\n";

  const EvalOptions eo{options.threads};
  for (AdapterMode mode : m.modes) {
    AdapterConfig cfg = m.adapter;
    cfg.mode = mode;
    const ProtocolReport report = runProtocol(b, m.shots, m.seeds, cfg, m.selector, eo);
    for (const auto& r : report.runs) row(r, std::to_string(r.seed));
    for (const auto& r : report.perDataset) row(r, "mean");
    row(report.average, "mean");

    summary << to_string(mode);
    for (const auto& r : report.perDataset) {
      summary << '\t' << fmt("%.2f", 100.0 * r.fpr95) << '\t' << fmt("%.2f", 100.0 * r.auroc);
    }
    summary << '\t' << fmt("%.2f", 100.0 * report.average.fpr95) << '\t'
            << fmt("%.2f", 100.0 * report.average.auroc) << '\n';
    note(options, std::string(to_string(mode)) + ": AUROC " + fmt("%.4f", report.average.auroc) +
                      " FPR95 " + fmt("%.4f", report.average.fpr95));
  }

  Outputs written;
  writeText(dir / "results.tsv", results.str(), written);
  writeText(dir / "summary.txt", summary.str(), written);
  return written;
}

Outputs cmdSweep(const RunManifest& m, const CommandOptions& options) {
  announceWarnings(m, options);
  const DatasetBundle b = loadBundle(m);
  const auto dir = prepareOutputDir(m);
  const SweepResult s = sweep(b, m.grid, m.shots, m.seeds.front(), m.objective, m.tuningSet,
                              m.adapter, m.selector, EvalOptions{options.threads});
  const char* label = tuningLabel(s.tuningSet);

  std::ostringstream grid;
  grid << "alpha\tbeta\ttau\tlambda\tAUROC\tFPR95\ttuning\n";
  for (const auto& r : s.rows) {
    grid << g9(r.alpha) << '\t' << g9(r.beta) << '\t' << g9(r.tau) << '\t' << g9(r.lambda) << '\t'
         << fmt("%.6f", r.auroc) << '\t' << fmt("%.6f", r.fpr95) << '\t' << label << '\n';
  }

  std::ostringstream best;
  best << "label\t" << label << '\n'
       << "tuning_set\t" << to_string(s.tuningSet) << '\n'
       << "objective\t" << to_string(s.objective) << '\n'
       << "mode\t" << to_string(s.bestAdapter.mode) << '\n'
       << "alpha\t" << g9(s.bestAdapter.alpha) << '\n'
       << "beta\t" << g9(s.bestAdapter.beta) << '\n'
       << "tau\t" << g9(s.bestAdapter.tau) << '\n'
       << "lambda\t" << g9(s.bestSelector.lambda) << '\n';
  for (const auto& r : s.report) {
    best << "report\t" << r.datasetName << '\t' << fmt("%.6f", r.fpr95) << '\t' << fmt("%.6f", r.auroc)
         << '\n';
  }
  best << "report\tAverage\t" << fmt("%.6f", s.reportAverage.fpr95) << '\t'
       << fmt("%.6f", s.reportAverage.auroc) << '\n';

  Outputs written;
  writeText(dir / "sweep.tsv", grid.str(), written);
  writeText(dir / "best.txt", best.str(), written);
  note(options, std::string("best (") + label + "): alpha " + g9(s.bestAdapter.alpha) + " beta " +
                    g9(s.bestAdapter.beta) + " tau " + g9(s.bestAdapter.tau) + " lambda " +
                    g9(s.bestSelector.lambda));
  return written;
}

}  // namespace dualcache::cli
