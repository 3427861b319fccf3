#include "chunkformer/attention.hpp"

#include <cmath>

#include "chunkformer/errors.hpp"

namespace cf {

AttentionBlockConfig AttentionBlockConfig::init(std::size_t d_model,
                                                std::size_t heads,
                                                std::size_t d_ff,
                                                real dropout_rate,
                                                std::mt19937_64& rng) {
  if (d_model == 0 || heads == 0 || d_model % heads != 0)
    throw ConfigError("d_model must be a positive multiple of heads");
  if (dropout_rate < real{0} || dropout_rate >= real{1})
    throw ConfigError("dropout rate must be in [0,1)");
  AttentionBlockConfig cfg;
  cfg.d_model = d_model;
  cfg.heads = heads;
  cfg.d_ff = d_ff;
  cfg.dropout_rate = dropout_rate;
  const real b = real{1} / std::sqrt(static_cast<real>(d_model));
  auto proj = [&] { return Tensor::uniform({d_model, d_model}, -b, b, rng, true); };
  cfg.wq = proj();
  cfg.wk = proj();
  cfg.wv = proj();
  cfg.wo = proj();
  cfg.bq = Tensor::zeros({d_model}, true);
  cfg.bk = Tensor::zeros({d_model}, true);
  cfg.bv = Tensor::zeros({d_model}, true);
  cfg.bo = Tensor::zeros({d_model}, true);
  if (d_ff > 0) {
    const real bf = real{1} / std::sqrt(static_cast<real>(d_ff));
    cfg.ffn_w1 = Tensor::uniform({d_model, d_ff}, -b, b, rng, true);
    cfg.ffn_b1 = Tensor::zeros({d_ff}, true);
    cfg.ffn_w2 = Tensor::uniform({d_ff, d_model}, -bf, bf, rng, true);
    cfg.ffn_b2 = Tensor::zeros({d_model}, true);
  }
  cfg.ln1_gamma = Tensor::full({d_model}, real{1}, true);
  cfg.ln1_beta = Tensor::zeros({d_model}, true);
  cfg.ln2_gamma = Tensor::full({d_model}, real{1}, true);
  cfg.ln2_beta = Tensor::zeros({d_model}, true);
  return cfg;
}

std::vector<Tensor> AttentionBlockConfig::parameters() const {
  std::vector<Tensor> ps = {wq, bq, wk, bk, wv, bv, wo, bo,
                            ln1_gamma, ln1_beta, ln2_gamma, ln2_beta};
  if (d_ff > 0) {
    ps.push_back(ffn_w1);
    ps.push_back(ffn_b1);
    ps.push_back(ffn_w2);
    ps.push_back(ffn_b2);
  }
  return ps;
}

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            const std::vector<std::uint8_t>& mask,
                            FootprintMeter* meter, bool scale_scores) {
  if (q.rows() != k.rows() || q.rows() != v.rows())
    throw DimensionError("scaled_dot_attention: row count mismatch");
  if (mask.size() != q.rows())
    throw DimensionError("scaled_dot_attention: mask length mismatch");
  bool any_real = false;
  for (auto m : mask) any_real = any_real || m;
  if (!mask.empty() && !any_real) {
    // Fully masked chunk: no real queries, nothing to attend to.
    return mask_rows(v, mask);
  }
  Tensor scores = matmul(q, transpose(k));
  if (scale_scores) {
    scores = scale(scores, real{1} / std::sqrt(static_cast<real>(q.cols())));
  }
  if (meter != nullptr)
    meter->add(static_cast<long long>(scores.size()));
  scores = mask_score_cols(scores, mask);
  Tensor weights = softmax_rows(scores);
  // Real query rows with every key masked cannot occur here (any_real holds),
  // but guard against it anyway.
  for (std::size_t i = 0; i < weights.rows(); ++i) {
    if (!mask[i]) continue;
    real row_sum = 0;
    for (std::size_t j = 0; j < weights.cols(); ++j) row_sum += weights.at(i, j);
    if (row_sum == real{0})
      throw NumericError("scaled_dot_attention: all keys masked for real query");
  }
  return mask_rows(matmul(weights, v), mask);
}

Tensor block_forward(const ChunkInput& chunk, const AttentionBlockConfig& cfg,
                     bool training, std::mt19937_64* rng,
                     FootprintMeter* meter) {
  const std::size_t k = chunk.values.rows();
  if (chunk.values.cols() != cfg.d_model) {
    throw DimensionError("block_forward: chunk width " +
                         std::to_string(chunk.values.cols()) +
                         " != d_model " + std::to_string(cfg.d_model));
  }
  const std::size_t d_h = cfg.d_model / cfg.heads;
  const bool drop = training && cfg.dropout_rate > real{0} && rng != nullptr;

  // Pre-norm multi-head attention with residual.
  Tensor x = chunk.values;
  Tensor xn = layer_norm(x, cfg.ln1_gamma, cfg.ln1_beta, real{1e-5});
  Tensor q = add_row(matmul(xn, cfg.wq), cfg.bq);
  Tensor kk = add_row(matmul(xn, cfg.wk), cfg.bk);
  Tensor vv = add_row(matmul(xn, cfg.wv), cfg.bv);
  std::vector<Tensor> head_outs;
  head_outs.reserve(cfg.heads);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const std::size_t c0 = h * d_h, c1 = (h + 1) * d_h;
    head_outs.push_back(scaled_dot_attention(
        slice_cols(q, c0, c1), slice_cols(kk, c0, c1), slice_cols(vv, c0, c1),
        chunk.mask, meter));
  }
  Tensor attn = add_row(matmul(concat_cols(head_outs), cfg.wo), cfg.bo);
  if (drop) attn = dropout(attn, cfg.dropout_rate, *rng);
  x = add(x, mask_rows(attn, chunk.mask));

  // Pre-norm position-wise FFN with residual.
  if (cfg.d_ff > 0) {
    Tensor yn = layer_norm(x, cfg.ln2_gamma, cfg.ln2_beta, real{1e-5});
    Tensor f = add_row(matmul(yn, cfg.ffn_w1), cfg.ffn_b1);
    f = relu(f);
    f = add_row(matmul(f, cfg.ffn_w2), cfg.ffn_b2);
    if (drop) f = dropout(f, cfg.dropout_rate, *rng);
    x = add(x, mask_rows(f, chunk.mask));
  }
  (void)k;
  return mask_rows(x, chunk.mask);
}

}  // namespace cf
