#pragma once

#include <string>
#include <vector>

#include "chunkformer/bench.hpp"
#include "chunkformer/chunkformer.hpp"
#include "chunkformer/pipeline.hpp"
#include "chunkformer/synth.hpp"
#include "chunkformer/train.hpp"

namespace cf {

struct BenchSection {
  std::vector<std::size_t> lengths = {180, 240, 480, 720};
  // Each variant is a stage chunk-size list; empty list = full attention.
  std::vector<std::vector<std::size_t>> variants = {{}, {3, 4}};
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::size_t repetitions = 5;
  bool include_backward = false;
  std::string out_prefix = "bench_report";
};

// Complete declarative description of one run. Serializable and
// self-validating; a run can be re-executed from its stored config.
struct RunConfig {
  int version = 1;
  std::uint64_t seed = 7;

  DataConfig data;
  std::string manifest_dir = "manifest";

  std::string model_kind = "chunkformer";  // or "mean_pool_baseline"
  ChunkFormerConfig model;

  TrainConfig train;
  std::string checkpoint_path = "model.ckpt.json";
  std::string metrics_path = "metrics.jsonl";

  SynthConfig synth;
  BenchSection bench;

  void validate() const;
  std::string to_json() const;
  static RunConfig from_json(const std::string& text);
  static RunConfig from_file(const std::string& path);
};

}  // namespace cf
