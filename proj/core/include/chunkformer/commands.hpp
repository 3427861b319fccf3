#pragma once

#include <string>

#include "chunkformer/config.hpp"

namespace cf {

// Command drivers behind the CLI. Each throws a cf::Error subclass on
// failure; the CLI maps those to exit codes.
void cmd_synth(const RunConfig& cfg);
void cmd_preprocess(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg, bool resume = false);
void cmd_eval(const std::string& checkpoint_path,
              const std::string& manifest_dir, const std::string& split_name,
              const std::string& report_path = "");
void cmd_bench(const RunConfig& cfg);

// Exit code per error category: config 2, ingestion 3, numeric 4,
// compatibility 5, anything else 1.
int exit_code_for(const std::exception& e);

}  // namespace cf
