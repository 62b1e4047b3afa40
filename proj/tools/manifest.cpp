#include "manifest.hpp"

#include <fstream>
#include <sstream>

#include "dualcache/error.hpp"
#include "json.hpp"

namespace dualcache::cli {

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorKind::ManifestError, std::string("missing required key '") + key + "'");
  }
  return obj.at(key);
}

std::filesystem::path resolve(const std::filesystem::path& base, const json& value) {
  const std::filesystem::path p = value.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

std::vector<double> doubles(const json& obj, const char* key, std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  return obj.at(key).get<std::vector<double>>();
}

}  // namespace

RunManifest parseManifestText(const std::string& text, const std::filesystem::path& baseDir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ManifestError, e.what());
  }

  RunManifest m;
  try {
    const auto& train = require(root, "id_train");
    m.idTrainEmbeddings = resolve(baseDir, require(train, "embeddings"));
    m.idTrainLabels = resolve(baseDir, require(train, "labels"));
    const auto& test = require(root, "id_test");
    m.idTestEmbeddings = resolve(baseDir, require(test, "embeddings"));
    m.idTestLabels = resolve(baseDir, require(test, "labels"));
    for (const auto& ood : require(root, "ood_test")) {
      m.oodTest.push_back({require(ood, "name").get<std::string>(),
                           resolve(baseDir, require(ood, "embeddings"))});
    }
    if (m.oodTest.empty()) throw Error(ErrorKind::ManifestError, "ood_test is empty");
    m.vocabulary = resolve(baseDir, require(root, "vocabulary"));

    const auto& text = require(root, "text");
    m.textDir = text.contains("dir") ? resolve(baseDir, text.at("dir")) : baseDir;
    m.textDataset = require(text, "dataset").get<std::string>();
    m.positiveTemplates = resolve(baseDir, require(text, "positive"));
    m.negativeTemplates = resolve(baseDir, require(text, "negative"));

    if (root.contains("partition")) m.partition = resolve(baseDir, root.at("partition"));
    m.shots = root.value("shots", m.shots);
    if (root.contains("seeds")) m.seeds = root.at("seeds").get<std::vector<std::uint64_t>>();
    if (m.seeds.empty()) throw Error(ErrorKind::ManifestError, "seeds is empty");
    m.normalize = root.value("normalize", m.normalize);
    m.dumpLogits = root.value("dump_logits", m.dumpLogits);

    if (root.contains("selector")) {
      const auto& sel = root.at("selector");
      m.selector.lambda = sel.value("lambda", m.selector.lambda);
      if (sel.contains("q") && !sel.at("q").is_null()) m.selector.q = sel.at("q").get<std::size_t>();
      if (sel.contains("criterion")) {
        m.selector.criterion = parseCriterionMode(sel.at("criterion").get<std::string>());
      }
    }
    if (root.contains("adapter")) {
      const auto& ad = root.at("adapter");
      m.adapter.alpha = ad.value("alpha", m.adapter.alpha);
      m.adapter.beta = ad.value("beta", m.adapter.beta);
      m.adapter.tau = ad.value("tau", m.adapter.tau);
      if (ad.contains("mode")) m.adapter.mode = parseAdapterMode(ad.at("mode").get<std::string>());
      if (ad.contains("pooling")) m.adapter.pooling = parsePooling(ad.at("pooling").get<std::string>());
    }
    m.adapter.validate();
    if (!m.adapter.withinSearchRanges()) {
      m.warnings.push_back("adapter parameters lie outside the customary search ranges");
    }
    if (root.contains("modes")) {
      for (const auto& mode : root.at("modes")) m.modes.push_back(parseAdapterMode(mode.get<std::string>()));
    }
    if (m.modes.empty()) m.modes.push_back(m.adapter.mode);

    const json sweep = root.value("sweep", json::object());
    m.grid.alphas = doubles(sweep, "alphas", {m.adapter.alpha});
    m.grid.betas = doubles(sweep, "betas", {m.adapter.beta});
    m.grid.taus = doubles(sweep, "taus", {m.adapter.tau});
    m.grid.lambdas = doubles(sweep, "lambdas", {m.selector.lambda});
    if (sweep.contains("objective")) m.objective = parseObjective(sweep.at("objective").get<std::string>());
    if (sweep.contains("tuning_set")) {
      m.tuningSet = parseTuningSet(sweep.at("tuning_set").get<std::string>());
    }
    m.grid.validate();
    if (!m.grid.withinSearchRanges()) {
      m.warnings.push_back(
          "sweep grid leaves the customary ranges (alpha, beta in [0,30]; tau in [0.03,10])");
    }

    m.outputDir = root.contains("output_dir") ? resolve(baseDir, root.at("output_dir"))
                                              : baseDir / "out";
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ManifestError, e.what());
  }
  return m;
}

RunManifest parseManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    RunManifest m = parseManifestText(buf.str(), path.parent_path());
    m.source = path;
    return m;
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void checkFilesExist(const RunManifest& m) {
  std::vector<std::filesystem::path> files{m.idTrainEmbeddings, m.idTrainLabels,
                                           m.idTestEmbeddings,  m.idTestLabels,
                                           m.vocabulary,        m.positiveTemplates,
                                           m.negativeTemplates};
  for (const auto& ood : m.oodTest) files.push_back(ood.embeddings);
  if (m.partition) files.push_back(*m.partition);
  for (const auto& f : files) {
    if (!std::filesystem::exists(f)) throw Error(ErrorKind::IoError, "missing file " + f.string());
  }
}

DatasetBundle loadBundle(const RunManifest& m) {
  checkFilesExist(m);
  auto prepare = [&](EmbeddingMatrix e) { return m.normalize ? l2Normalize(e) : e; };

  DatasetBundle b;
  b.vocab = loadVocabulary(m.vocabulary);
  const std::size_t classes = b.vocab.classCount();
  b.idTrain = {prepare(loadEmbeddings(m.idTrainEmbeddings)), loadLabels(m.idTrainLabels), classes};
  b.idTest = {prepare(loadEmbeddings(m.idTestEmbeddings)), loadLabels(m.idTestLabels), classes};
  for (const auto& ood : m.oodTest) b.oodTest.push_back({ood.name, prepare(loadEmbeddings(ood.embeddings))});
  b.positiveText = loadTemplateSet(m.positiveTemplates, m.textDir, m.textDataset);
  b.negativeText = loadTemplateSet(m.negativeTemplates, m.textDir, m.textDataset);
  b.validate();
  return b;
}

}  // namespace dualcache::cli
