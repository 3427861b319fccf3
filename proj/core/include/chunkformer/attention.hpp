#pragma once

#include <cstdint>
#include <vector>

#include "chunkformer/tensor.hpp"

namespace cf {

// Counts live attention score-matrix elements. Each stage accumulates the
// score matrices of all of its chunks; end_stage() records the stage total
// and folds it into the peak.
class FootprintMeter {
 public:
  void add(long long elements) {
    current_ += elements;
    if (current_ > peak_) peak_ = current_;
  }
  void end_stage() {
    stage_totals_.push_back(current_);
    current_ = 0;
  }
  long long peak() const { return peak_; }
  const std::vector<long long>& stage_totals() const { return stage_totals_; }
  void reset() {
    current_ = 0;
    peak_ = 0;
    stage_totals_.clear();
  }

 private:
  long long current_ = 0;
  long long peak_ = 0;
  std::vector<long long> stage_totals_;
};

// One transformer encoder sub-block: pre-norm multi-head attention plus
// pre-norm position-wise FFN, each with a residual connection. d_ff == 0
// disables the FFN path.
struct AttentionBlockConfig {
  std::size_t d_model = 0;
  std::size_t heads = 1;
  std::size_t d_ff = 0;
  real dropout_rate = real{0};

  Tensor wq, wk, wv, wo;          // [d_model x d_model]
  Tensor bq, bk, bv, bo;          // [d_model]
  Tensor ffn_w1, ffn_b1;          // [d_model x d_ff], [d_ff]
  Tensor ffn_w2, ffn_b2;          // [d_ff x d_model], [d_model]
  Tensor ln1_gamma, ln1_beta;     // [d_model]
  Tensor ln2_gamma, ln2_beta;     // [d_model]

  static AttentionBlockConfig init(std::size_t d_model, std::size_t heads,
                                   std::size_t d_ff, real dropout_rate,
                                   std::mt19937_64& rng);
  std::vector<Tensor> parameters() const;
};

struct ChunkInput {
  Tensor values;                   // [k x d_model]
  std::vector<std::uint8_t> mask;  // length k, true = real position
};

// softmax(q k^T / sqrt(d_h)) v with key masking. Masked keys get weight
// exactly zero; masked query rows come out exactly zero. scale_scores=false
// drops the 1/sqrt(d_h) factor (used by tests).
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            const std::vector<std::uint8_t>& mask,
                            FootprintMeter* meter = nullptr,
                            bool scale_scores = true);

// Full encoder sub-block over one chunk. Dropout draws from rng only when
// training is true. Masked rows of the output are exactly zero.
Tensor block_forward(const ChunkInput& chunk, const AttentionBlockConfig& cfg,
                     bool training, std::mt19937_64* rng = nullptr,
                     FootprintMeter* meter = nullptr);

}  // namespace cf
