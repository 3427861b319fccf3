#include "chunkformer/embedding.hpp"

#include <cmath>

#include "chunkformer/errors.hpp"

namespace cf {

std::size_t default_embedding_dim(std::size_t vocab_size) {
  const std::size_t dim = static_cast<std::size_t>(
      std::ceil(std::pow(static_cast<double>(vocab_size), 0.25)));
  return std::min<std::size_t>(std::max<std::size_t>(dim, 1), 64);
}

EmbeddingTable EmbeddingTable::make(std::string feature,
                                    std::size_t vocab_size, std::size_t dim,
                                    std::mt19937_64& rng) {
  const real bound = real{1} / std::sqrt(static_cast<real>(dim));
  Tensor w = Tensor::uniform({vocab_size, dim}, -bound, bound, rng, true);
  // Row 0 is the padding / unknown row and starts at zero.
  auto data = w.mutable_data();
  for (std::size_t j = 0; j < dim; ++j) data[j] = real{0};
  return EmbeddingTable{std::move(feature), vocab_size, dim, std::move(w)};
}

PositionalMode positional_mode_from_string(const std::string& s) {
  if (s == "sinusoidal") return PositionalMode::kSinusoidal;
  if (s == "learned") return PositionalMode::kLearned;
  if (s == "none") return PositionalMode::kNone;
  throw ConfigError("unknown positional mode: " + s);
}

std::string to_string(PositionalMode m) {
  switch (m) {
    case PositionalMode::kSinusoidal: return "sinusoidal";
    case PositionalMode::kLearned: return "learned";
    case PositionalMode::kNone: return "none";
  }
  return "none";
}

Tensor embed_step(const std::vector<std::size_t>& feature_ids,
                  const std::vector<EmbeddingTable>& tables) {
  if (feature_ids.size() != tables.size())
    throw DimensionError("embed_step: one id per configured feature expected");
  std::vector<Tensor> parts;
  parts.reserve(tables.size());
  for (std::size_t f = 0; f < tables.size(); ++f) {
    if (feature_ids[f] >= tables[f].vocab_size) {
      throw EncodingError("feature '" + tables[f].feature + "': id " +
                          std::to_string(feature_ids[f]) +
                          " >= vocab size " +
                          std::to_string(tables[f].vocab_size));
    }
    parts.push_back(gather_rows(tables[f].weights, {feature_ids[f]}));
  }
  return concat_cols(parts);
}

Tensor embed_sequence(const std::vector<std::vector<std::size_t>>& ids,
                      const std::vector<EmbeddingTable>& tables) {
  if (ids.empty()) throw DimensionError("embed_sequence: empty sequence");
  std::vector<Tensor> parts;
  parts.reserve(tables.size());
  for (std::size_t f = 0; f < tables.size(); ++f) {
    std::vector<std::size_t> column(ids.size());
    for (std::size_t t = 0; t < ids.size(); ++t) {
      if (ids[t].size() != tables.size())
        throw DimensionError("embed_sequence: record width mismatch");
      if (ids[t][f] >= tables[f].vocab_size) {
        throw EncodingError("feature '" + tables[f].feature + "': id " +
                            std::to_string(ids[t][f]) + " >= vocab size " +
                            std::to_string(tables[f].vocab_size));
      }
      column[t] = ids[t][f];
    }
    parts.push_back(gather_rows(tables[f].weights, column));
  }
  return concat_cols(parts);
}

Tensor sinusoidal_positions(std::size_t L, std::size_t d) {
  std::vector<real> pe(L * d);
  for (std::size_t pos = 0; pos < L; ++pos) {
    for (std::size_t j = 0; j < d; ++j) {
      const double exponent = static_cast<double>(2 * (j / 2)) /
                              static_cast<double>(d);
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, exponent);
      pe[pos * d + j] = static_cast<real>((j % 2 == 0) ? std::sin(angle)
                                                       : std::cos(angle));
    }
  }
  return Tensor({L, d}, std::move(pe));
}

EmbeddedSequence add_positions(EmbeddedSequence seq, PositionalMode mode,
                               const Tensor* learned_table) {
  if (mode == PositionalMode::kNone) return seq;
  const std::size_t L = seq.values.rows();
  const std::size_t d = seq.values.cols();
  Tensor pos;
  if (mode == PositionalMode::kSinusoidal) {
    pos = sinusoidal_positions(L, d);
  } else {
    if (learned_table == nullptr || learned_table->rows() < L ||
        learned_table->cols() != d)
      throw DimensionError("add_positions: learned table too small");
    pos = slice_rows(*learned_table, 0, L);
  }
  seq.values = add(seq.values, mask_rows(pos, seq.mask));
  return seq;
}

}  // namespace cf
