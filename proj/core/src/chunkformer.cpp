#include "chunkformer/chunkformer.hpp"

#include <cmath>
#include <numeric>

#include "chunkformer/errors.hpp"

namespace cf {

PredictionMode prediction_mode_from_string(const std::string& s) {
  if (s == "last_position") return PredictionMode::kLastPosition;
  if (s == "per_position") return PredictionMode::kPerPosition;
  throw ConfigError("unknown prediction mode: " + s);
}

std::string to_string(PredictionMode m) {
  return m == PredictionMode::kLastPosition ? "last_position" : "per_position";
}

void ChunkFormerConfig::validate() const {
  if (stage_chunk_sizes.empty())
    throw ConfigError("model must have at least one stage");
  for (std::size_t s = 0; s < stage_chunk_sizes.size(); ++s) {
    if (stage_chunk_sizes[s] == 0)
      throw ConfigError("chunk sizes must be >= 1");
    if (s > 0 && stage_chunk_sizes[s] <= stage_chunk_sizes[s - 1])
      throw ConfigError("stage chunk sizes must be strictly increasing");
  }
  if (L == 0) throw ConfigError("sequence length L must be >= 1");
  if (d_model == 0 || heads == 0 || d_model % heads != 0)
    throw ConfigError("d_model must be a positive multiple of heads");
  if (dropout < real{0} || dropout >= real{1})
    throw ConfigError("dropout must be in [0,1)");
}

std::size_t ChunkFormerConfig::alignment() const {
  std::size_t a = 1;
  for (std::size_t k : stage_chunk_sizes) a = std::lcm(a, k);
  return a;
}

ChunkPartition partition(std::size_t padded_length, std::size_t chunk_size) {
  if (chunk_size == 0) throw ConfigError("chunk size must be >= 1");
  if (padded_length % chunk_size != 0)
    throw ContractError("partition: length " + std::to_string(padded_length) +
                        " not divisible by chunk size " +
                        std::to_string(chunk_size));
  ChunkPartition p;
  for (std::size_t b = 0; b < padded_length / chunk_size; ++b)
    p.ranges.push_back({b * chunk_size, (b + 1) * chunk_size});
  return p;
}

EmbeddedSequence pad_to_multiple(EmbeddedSequence seq,
                                 const std::vector<std::size_t>& chunk_sizes) {
  if (!seq.values.defined())
    throw DimensionError("pad_to_multiple: empty sequence");
  const std::size_t L = seq.values.rows();
  std::size_t align = 1;
  for (std::size_t k : chunk_sizes) align = std::lcm(align, k);
  const std::size_t padded = ((L + align - 1) / align) * align;
  if (padded == L) return seq;
  Tensor zeros = Tensor::zeros({padded - L, seq.values.cols()});
  seq.values = concat_rows({seq.values, zeros});
  seq.mask.resize(padded, 0);
  return seq;
}

HiddenStates stage_forward(const HiddenStates& h, const StageConfig& stage,
                           bool training, std::mt19937_64* rng,
                           FootprintMeter* meter) {
  const std::size_t L = h.values.rows();
  const ChunkPartition part = partition(L, stage.chunk_size);
  std::vector<Tensor> outs;
  outs.reserve(part.chunk_count());
  for (const auto& r : part.ranges) {
    ChunkInput chunk;
    chunk.values = slice_rows(h.values, r.begin, r.end);
    chunk.mask.assign(h.mask.begin() + r.begin, h.mask.begin() + r.end);
    outs.push_back(block_forward(chunk, stage.block, training, rng, meter));
  }
  if (meter != nullptr) meter->end_stage();
  HiddenStates out;
  out.values = concat_rows(outs);
  out.stage_index = h.stage_index + 1;
  out.mask = h.mask;
  return out;
}

FootprintReport attention_footprint(const ChunkFormerConfig& cfg) {
  cfg.validate();
  const std::size_t align = cfg.alignment();
  const long long L =
      static_cast<long long>(((cfg.L + align - 1) / align) * align);
  FootprintReport r;
  for (std::size_t k : cfg.stage_chunk_sizes) {
    const long long f = static_cast<long long>(k) * L;  // B * k^2 = k * L
    r.per_stage.push_back(f);
    r.peak = std::max(r.peak, f);
  }
  r.full_attention = L * L;
  return r;
}

namespace {

std::size_t total_embedding_dim(const std::vector<FeatureSpec>& features) {
  std::size_t d = 0;
  for (const auto& f : features) d += f.embedding_dim;
  return d;
}

std::vector<EmbeddingTable> make_tables(const std::vector<FeatureSpec>& specs,
                                        std::mt19937_64& rng) {
  std::vector<EmbeddingTable> tables;
  tables.reserve(specs.size());
  for (const auto& f : specs)
    tables.push_back(EmbeddingTable::make(f.name, f.vocab_size,
                                          f.embedding_dim, rng));
  return tables;
}

}  // namespace

ChunkFormerModel::ChunkFormerModel(ChunkFormerConfig cfg,
                                   std::vector<FeatureSpec> features,
                                   std::uint64_t seed)
    : cfg_(std::move(cfg)), features_(std::move(features)) {
  cfg_.validate();
  if (features_.empty()) throw ConfigError("model needs at least one feature");
  std::mt19937_64 rng(seed);
  tables_ = make_tables(features_, rng);
  const std::size_t d_in = total_embedding_dim(features_);
  const real bp = real{1} / std::sqrt(static_cast<real>(d_in));
  input_proj_ = Tensor::uniform({d_in, cfg_.d_model}, -bp, bp, rng, true);
  if (cfg_.positional == PositionalMode::kLearned) {
    const std::size_t align = cfg_.alignment();
    const std::size_t L_max = ((cfg_.L + align - 1) / align) * align;
    learned_pos_ = Tensor::zeros({L_max, cfg_.d_model}, true);
  }
  for (std::size_t k : cfg_.stage_chunk_sizes) {
    StageConfig stage;
    stage.chunk_size = k;
    stage.block = AttentionBlockConfig::init(cfg_.d_model, cfg_.heads,
                                             cfg_.effective_d_ff(),
                                             cfg_.dropout, rng);
    stages_.push_back(std::move(stage));
  }
  const std::size_t hh = cfg_.effective_head_hidden();
  const real bh = real{1} / std::sqrt(static_cast<real>(cfg_.d_model));
  head_w1_ = Tensor::uniform({cfg_.d_model, hh}, -bh, bh, rng, true);
  head_b1_ = Tensor::zeros({hh}, true);
  const real bh2 = real{1} / std::sqrt(static_cast<real>(hh));
  head_w2_ = Tensor::uniform({hh, 1}, -bh2, bh2, rng, true);
  head_b2_ = Tensor::zeros({1}, true);
}

EmbeddedSequence ChunkFormerModel::embed(const EncodedWindow& window) const {
  if (window.ids.empty()) throw DimensionError("embed: empty window");
  if (window.ids.size() > cfg_.L)
    throw DimensionError("embed: window longer than configured L");
  EmbeddedSequence seq;
  Tensor x = embed_sequence(window.ids, tables_);
  seq.values = matmul(x, input_proj_);
  seq.mask.assign(window.ids.size(), 1);
  seq.labels = window.labels;
  seq = add_positions(std::move(seq), cfg_.positional,
                      learned_pos_.defined() ? &learned_pos_ : nullptr);
  return seq;
}

HiddenStates ChunkFormerModel::forward_hidden(const EmbeddedSequence& seq,
                                              bool training,
                                              std::mt19937_64* rng,
                                              FootprintMeter* meter) {
  HiddenStates h;
  h.values = seq.values;
  h.mask = seq.mask;
  h.stage_index = 0;
  for (const StageConfig& stage : stages_)
    h = stage_forward(h, stage, training, rng, meter);
  return h;
}

Tensor ChunkFormerModel::apply_head(const HiddenStates& h,
                                    const EmbeddedSequence& seq) {
  std::size_t real_count = 0;
  for (auto m : seq.mask)
    if (m) ++real_count;
  if (real_count == 0) throw ContractError("apply_head: no real positions");
  auto head = [&](const Tensor& rows) {
    Tensor z = add_row(matmul(rows, head_w1_), head_b1_);
    z = relu(z);
    return add_row(matmul(z, head_w2_), head_b2_);
  };
  if (cfg_.prediction_mode == PredictionMode::kLastPosition) {
    Tensor last = slice_rows(h.values, real_count - 1, real_count);
    return head(last);  // [1 x 1]
  }
  return slice_rows(head(h.values), 0, real_count);  // [T x 1]
}

Tensor ChunkFormerModel::forward(const EncodedWindow& window, bool training,
                                 std::mt19937_64* rng, FootprintMeter* meter) {
  EmbeddedSequence seq = embed(window);
  EmbeddedSequence padded = pad_to_multiple(seq, cfg_.stage_chunk_sizes);
  HiddenStates h = forward_hidden(padded, training, rng, meter);
  return apply_head(h, padded);
}

std::vector<Tensor> ChunkFormerModel::parameters() {
  std::vector<Tensor> ps;
  for (auto& t : tables_) ps.push_back(t.weights);
  ps.push_back(input_proj_);
  if (learned_pos_.defined()) ps.push_back(learned_pos_);
  for (auto& s : stages_) {
    auto bp = s.block.parameters();
    ps.insert(ps.end(), bp.begin(), bp.end());
  }
  ps.push_back(head_w1_);
  ps.push_back(head_b1_);
  ps.push_back(head_w2_);
  ps.push_back(head_b2_);
  return ps;
}

MeanPoolBaseline::MeanPoolBaseline(ChunkFormerConfig cfg,
                                   std::vector<FeatureSpec> features,
                                   std::uint64_t seed)
    : cfg_(std::move(cfg)), features_(std::move(features)) {
  cfg_.validate();
  if (cfg_.prediction_mode != PredictionMode::kLastPosition)
    throw ConfigError("mean-pool baseline supports last_position only");
  std::mt19937_64 rng(seed);
  tables_ = make_tables(features_, rng);
  const std::size_t d_in = total_embedding_dim(features_);
  const real bp = real{1} / std::sqrt(static_cast<real>(d_in));
  input_proj_ = Tensor::uniform({d_in, cfg_.d_model}, -bp, bp, rng, true);
  const std::size_t hh = cfg_.effective_head_hidden();
  const real bh = real{1} / std::sqrt(static_cast<real>(cfg_.d_model));
  head_w1_ = Tensor::uniform({cfg_.d_model, hh}, -bh, bh, rng, true);
  head_b1_ = Tensor::zeros({hh}, true);
  const real bh2 = real{1} / std::sqrt(static_cast<real>(hh));
  head_w2_ = Tensor::uniform({hh, 1}, -bh2, bh2, rng, true);
  head_b2_ = Tensor::zeros({1}, true);
}

Tensor MeanPoolBaseline::forward(const EncodedWindow& window, bool training,
                                 std::mt19937_64* rng, FootprintMeter* meter) {
  (void)training;
  (void)rng;
  (void)meter;
  if (window.ids.empty()) throw DimensionError("forward: empty window");
  const std::size_t T = window.ids.size();
  Tensor x = matmul(embed_sequence(window.ids, tables_), input_proj_);
  Tensor pool_w = Tensor::full({1, T}, real{1} / static_cast<real>(T));
  Tensor pooled = matmul(pool_w, x);  // [1 x d_model]
  Tensor z = add_row(matmul(pooled, head_w1_), head_b1_);
  z = relu(z);
  return add_row(matmul(z, head_w2_), head_b2_);
}

std::vector<Tensor> MeanPoolBaseline::parameters() {
  std::vector<Tensor> ps;
  for (auto& t : tables_) ps.push_back(t.weights);
  ps.push_back(input_proj_);
  ps.push_back(head_w1_);
  ps.push_back(head_b1_);
  ps.push_back(head_w2_);
  ps.push_back(head_b2_);
  return ps;
}

}  // namespace cf
