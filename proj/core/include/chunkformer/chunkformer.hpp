#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chunkformer/attention.hpp"
#include "chunkformer/embedding.hpp"
#include "chunkformer/tensor.hpp"

namespace cf {

enum class PredictionMode { kLastPosition, kPerPosition };

PredictionMode prediction_mode_from_string(const std::string& s);
std::string to_string(PredictionMode m);

// One stage: a chunk size and the encoder block whose weights are shared by
// every chunk of the stage.
struct StageConfig {
  std::size_t chunk_size = 0;
  AttentionBlockConfig block;
};

struct ChunkFormerConfig {
  std::vector<std::size_t> stage_chunk_sizes;  // strictly increasing
  std::size_t L = 0;           // maximum sequence length (window size)
  std::size_t d_model = 0;
  std::size_t heads = 4;
  std::size_t d_ff = 0;        // 0 means 4 * d_model
  std::size_t head_hidden = 0; // 0 means d_model
  real dropout = real{0.1};
  PositionalMode positional = PositionalMode::kSinusoidal;
  PredictionMode prediction_mode = PredictionMode::kLastPosition;

  void validate() const;
  std::size_t effective_d_ff() const { return d_ff == 0 ? 4 * d_model : d_ff; }
  std::size_t effective_head_hidden() const {
    return head_hidden == 0 ? d_model : head_hidden;
  }
  // Smallest multiple of every stage chunk size.
  std::size_t alignment() const;
};

// Index ranges (0-based, half-open) of the B = L/k chunks.
struct ChunkPartition {
  struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;
  };
  std::vector<Range> ranges;
  std::size_t chunk_count() const { return ranges.size(); }
};

struct HiddenStates {
  Tensor values;                   // [L x d_model]
  std::size_t stage_index = 0;     // 0 = model input, s after stage s
  std::vector<std::uint8_t> mask;  // carried from the input
};

ChunkPartition partition(std::size_t padded_length, std::size_t chunk_size);

// Right-pads with masked zero positions to the smallest L' >= L divisible by
// every stage chunk size. Labels are untouched.
EmbeddedSequence pad_to_multiple(EmbeddedSequence seq,
                                 const std::vector<std::size_t>& chunk_sizes);

HiddenStates stage_forward(const HiddenStates& h, const StageConfig& stage,
                           bool training, std::mt19937_64* rng = nullptr,
                           FootprintMeter* meter = nullptr);

// Analytic score-matrix element counts (per head, per batch item).
struct FootprintReport {
  std::vector<long long> per_stage;  // k_s * L
  long long peak = 0;                // max_s k_s * L
  long long full_attention = 0;      // L^2 reference
};

FootprintReport attention_footprint(const ChunkFormerConfig& cfg);

// Encoded input consumed by a model: per-step feature ids plus targets.
struct EncodedWindow {
  std::vector<std::vector<std::size_t>> ids;  // [T][features]
  std::vector<real> labels;  // length 1 (last_position) or T (per_position)
};

// Common interface for the chunked model and the mean-pool baseline so the
// training loop does not care which one it drives.
class SequenceClassifier {
 public:
  virtual ~SequenceClassifier() = default;
  // Returns logits: [1] in last_position mode, [T] in per_position mode.
  virtual Tensor forward(const EncodedWindow& window, bool training,
                         std::mt19937_64* rng = nullptr,
                         FootprintMeter* meter = nullptr) = 0;
  virtual std::vector<Tensor> parameters() = 0;
  virtual std::string kind() const = 0;
};

struct FeatureSpec {
  std::string name;
  std::size_t vocab_size = 0;
  std::size_t embedding_dim = 0;
};

class ChunkFormerModel : public SequenceClassifier {
 public:
  ChunkFormerModel(ChunkFormerConfig cfg, std::vector<FeatureSpec> features,
                   std::uint64_t seed);

  Tensor forward(const EncodedWindow& window, bool training,
                 std::mt19937_64* rng = nullptr,
                 FootprintMeter* meter = nullptr) override;
  std::vector<Tensor> parameters() override;
  std::string kind() const override { return "chunkformer"; }

  // Embeds, pads, and projects a window into model space; exposed for tests.
  EmbeddedSequence embed(const EncodedWindow& window) const;
  // Runs the stage stack only; input must already be padded.
  HiddenStates forward_hidden(const EmbeddedSequence& seq, bool training,
                              std::mt19937_64* rng = nullptr,
                              FootprintMeter* meter = nullptr);
  // Head applied to final hidden states.
  Tensor apply_head(const HiddenStates& h, const EmbeddedSequence& seq);

  const ChunkFormerConfig& config() const { return cfg_; }
  const std::vector<FeatureSpec>& features() const { return features_; }
  std::vector<StageConfig>& stages() { return stages_; }
  std::vector<EmbeddingTable>& tables() { return tables_; }
  Tensor& head_w1() { return head_w1_; }
  Tensor& head_b1() { return head_b1_; }
  Tensor& head_w2() { return head_w2_; }
  Tensor& head_b2() { return head_b2_; }
  Tensor& input_proj() { return input_proj_; }

 private:
  ChunkFormerConfig cfg_;
  std::vector<FeatureSpec> features_;
  std::vector<EmbeddingTable> tables_;
  Tensor input_proj_;   // [sum(feature dims) x d_model]
  Tensor learned_pos_;  // [L x d_model] in learned positional mode
  std::vector<StageConfig> stages_;
  Tensor head_w1_, head_b1_, head_w2_, head_b2_;
};

// Attention-free reference: the same two-layer head on the mean of the
// embedded (projected) sequence over real positions.
class MeanPoolBaseline : public SequenceClassifier {
 public:
  MeanPoolBaseline(ChunkFormerConfig cfg, std::vector<FeatureSpec> features,
                   std::uint64_t seed);

  Tensor forward(const EncodedWindow& window, bool training,
                 std::mt19937_64* rng = nullptr,
                 FootprintMeter* meter = nullptr) override;
  std::vector<Tensor> parameters() override;
  std::string kind() const override { return "mean_pool_baseline"; }

  const ChunkFormerConfig& config() const { return cfg_; }
  const std::vector<FeatureSpec>& features() const { return features_; }

 private:
  ChunkFormerConfig cfg_;
  std::vector<FeatureSpec> features_;
  std::vector<EmbeddingTable> tables_;
  Tensor input_proj_;
  Tensor head_w1_, head_b1_, head_w2_, head_b2_;
};

}  // namespace cf
