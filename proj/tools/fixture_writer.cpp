#include "fixture_writer.hpp"

#include <fstream>

#include "dualcache/error.hpp"
#include "json.hpp"

namespace dualcache::cli {

namespace {

std::string writeTemplates(const std::filesystem::path& dir, const std::string& dataset,
                           const std::string& prefix, const TemplateSet& set) {
  const std::string file = dataset + "." + prefix + ".templates.tsv";
  std::ofstream out(dir / file, std::ios::binary);
  for (std::size_t t = 0; t < set.templates.size(); ++t) {
    const std::string id = prefix + std::to_string(t);
    out << id << '\t' << set.templates[t] << '\n';
    saveEmbeddings(dir / (dataset + "." + id + ".text.emb"), set.embeddings[t]);
  }
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + (dir / file).string());
  return file;
}

}  // namespace

std::filesystem::path writeBundle(const std::filesystem::path& dir, const std::string& dataset,
                                  const DatasetBundle& b, const std::string& manifestExtra) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json m = nlohmann::ordered_json::parse(manifestExtra);

  saveEmbeddings(dir / (dataset + ".train.emb"), b.idTrain.embeddings);
  saveLabels(dir / (dataset + ".train.lbl"), b.idTrain.labels);
  saveEmbeddings(dir / (dataset + ".test.emb"), b.idTest.embeddings);
  saveLabels(dir / (dataset + ".test.lbl"), b.idTest.labels);
  saveVocabulary(dir / (dataset + ".vocab.txt"), b.vocab);
  m["id_train"] = {{"embeddings", dataset + ".train.emb"}, {"labels", dataset + ".train.lbl"}};
  m["id_test"] = {{"embeddings", dataset + ".test.emb"}, {"labels", dataset + ".test.lbl"}};

  auto ood = nlohmann::ordered_json::array();
  for (const auto& set : b.oodTest) {
    const std::string file = dataset + ".ood." + set.name + ".emb";
    saveEmbeddings(dir / file, set.embeddings);
    ood.push_back({{"name", set.name}, {"embeddings", file}});
  }
  m["ood_test"] = ood;
  m["vocabulary"] = dataset + ".vocab.txt";
  m["text"] = {{"dir", "."},
               {"dataset", dataset},
               {"positive", writeTemplates(dir, dataset, "pos", b.positiveText)},
               {"negative", writeTemplates(dir, dataset, "neg", b.negativeText)}};

  const auto path = dir / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  out << m.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  return path;
}

}  // namespace dualcache::cli
