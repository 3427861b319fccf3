#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "chunkformer/adam.hpp"
#include "chunkformer/chunkformer.hpp"

namespace cf {

// Versioned JSON checkpoint: model kind + config + feature specs + all
// weights, optional optimizer state, and the schema hash of the dataset the
// model was trained against.
void save_checkpoint(const std::string& path, SequenceClassifier& model,
                     std::uint64_t schema_hash, std::size_t epoch,
                     const Adam* opt = nullptr);

struct LoadedCheckpoint {
  std::unique_ptr<SequenceClassifier> model;
  ChunkFormerConfig config;
  std::vector<FeatureSpec> features;
  std::string kind;
  std::uint64_t schema_hash = 0;
  std::size_t epoch = 0;
  bool has_optimizer_state = false;
  long long adam_t = 0;
  std::vector<std::vector<real>> adam_m, adam_v;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

std::string model_config_to_json(const ChunkFormerConfig& cfg);
ChunkFormerConfig model_config_from_json(const std::string& text);

}  // namespace cf
