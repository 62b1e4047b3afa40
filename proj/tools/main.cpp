#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "dualcache/error.hpp"

namespace {

std::size_t threadsFromEnv(std::size_t fallback) {
  const char* env = std::getenv("DUALCACHE_THREADS");
  if (!env || !*env) return fallback;
  try {
    std::size_t pos = 0;
    const unsigned long v = std::stoul(env, &pos);
    if (pos == std::string(env).size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw dualcache::Error(dualcache::ErrorKind::InvalidArgument,
                         std::string("DUALCACHE_THREADS must be a positive integer, got '") + env + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free dual-cache OOD detection over precomputed embeddings", "dualcache"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string manifestPath;
  std::string outDir;
  std::size_t threads = 1;
  std::string mode;
  app.add_option("--manifest", manifestPath, "Run manifest (JSON)")->required();
  app.add_option("--out", outDir, "Output directory; overrides the manifest");
  app.add_option("--threads", threads, "Worker threads (DUALCACHE_THREADS wins)")->check(CLI::PositiveNumber);
  app.add_option("--mode", mode, "positive-only | negative-only | dual | mcm-baseline");

  app.add_subcommand("validate", "Check manifest, files and formats");
  app.add_subcommand("select-channels", "Write the channel partition and stats table");
  app.add_subcommand("build-cache", "Write positive and negative caches");
  app.add_subcommand("score", "Write per-sample OOD scores");
  app.add_subcommand("eval", "Run the few-shot protocol and write results tables");
  app.add_subcommand("sweep", "Grid search over alpha, beta, tau, lambda");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    dualcache::cli::CommandOptions options;
    options.threads = threadsFromEnv(threads);
    options.log = &std::cerr;
    if (!outDir.empty()) options.out = outDir;
    if (!mode.empty()) options.mode = dualcache::parseAdapterMode(mode);

    const auto manifest =
        dualcache::cli::applyOverrides(dualcache::cli::parseManifest(manifestPath), options);
    const std::string cmd = app.get_subcommands().front()->get_name();
    using namespace dualcache::cli;
    Outputs written;
    if (cmd == "validate") written = cmdValidate(manifest, options, std::cout);
    else if (cmd == "select-channels") written = cmdSelectChannels(manifest, options);
    else if (cmd == "build-cache") written = cmdBuildCache(manifest, options);
    else if (cmd == "score") written = cmdScore(manifest, options);
    else if (cmd == "eval") written = cmdEval(manifest, options);
    else written = cmdSweep(manifest, options);
    for (const auto& path : written) std::cout << "wrote " << path.string() << '\n';
    return 0;
  } catch (const dualcache::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
