#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "chunkformer/commands.hpp"
#include "chunkformer/errors.hpp"

namespace {

int verbosity() {
  const char* v = std::getenv("CHUNKFORMER_LOG");
  return v ? std::atoi(v) : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chunked multi-stage transformer for long sequences"};
  app.require_subcommand(1);

  std::string config_path;
  std::string checkpoint_path, manifest_dir, split_name = "test", report_path;
  bool resume = false;

  auto* synth = app.add_subcommand("synth", "generate a synthetic CSV dataset");
  synth->add_option("config", config_path, "run config JSON")->required();

  auto* preprocess =
      app.add_subcommand("preprocess", "build schema + encoded manifest from CSV");
  preprocess->add_option("config", config_path, "run config JSON")->required();

  auto* train = app.add_subcommand("train", "train a model on a manifest");
  train->add_option("config", config_path, "run config JSON")->required();
  train->add_flag("--resume", resume, "resume from the configured checkpoint");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  eval->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("manifest", manifest_dir, "manifest directory")->required();
  eval->add_option("--split", split_name, "train|val|test (default test)");
  eval->add_option("--out", report_path, "also write the report here");

  auto* bench = app.add_subcommand("bench", "footprint + timing sweep");
  bench->add_option("config", config_path, "run config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      cf::cmd_synth(cf::RunConfig::from_file(config_path));
    } else if (preprocess->parsed()) {
      cf::cmd_preprocess(cf::RunConfig::from_file(config_path));
    } else if (train->parsed()) {
      cf::cmd_train(cf::RunConfig::from_file(config_path), resume);
    } else if (eval->parsed()) {
      cf::cmd_eval(checkpoint_path, manifest_dir, split_name, report_path);
    } else if (bench->parsed()) {
      cf::cmd_bench(cf::RunConfig::from_file(config_path));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (verbosity() > 0) std::cerr << "(exit code per error category)\n";
    return cf::exit_code_for(e);
  }
  return 0;
}
