#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dualcache/error.hpp"
#include "dualcache/synthetic.hpp"
#include "fixture_writer.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write the synthetic cluster fixture as embedding files plus a manifest",
               "dualcache-make-fixture"};
  std::string out;
  std::string dataset = "synthetic";
  std::string extra = "{}";
  dualcache::SyntheticSpec spec;
  app.add_option("--out", out, "Target directory")->required();
  app.add_option("--dataset", dataset, "File prefix");
  app.add_option("--seed", spec.seed, "Fixture seed");
  app.add_option("--dim", spec.dim, "Channel count");
  app.add_option("--classes", spec.classes, "ID classes");
  app.add_option("--manifest-extra", extra, "JSON object merged into the manifest");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto path =
        dualcache::cli::writeBundle(out, dataset, dualcache::makeClusterFixture(spec), extra);
    std::cout << "wrote " << path.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
