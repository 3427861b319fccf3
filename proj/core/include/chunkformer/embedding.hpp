#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chunkformer/tensor.hpp"

namespace cf {

// Per-feature lookup table. Index 0 is reserved for padding / unknown and is
// initialized to the zero vector.
struct EmbeddingTable {
  std::string feature;
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
  Tensor weights;  // [vocab_size x dim], requires_grad

  static EmbeddingTable make(std::string feature, std::size_t vocab_size,
                             std::size_t dim, std::mt19937_64& rng);
};

// Default embedding width for a feature: ceil(vocab^0.25), capped at 64.
std::size_t default_embedding_dim(std::size_t vocab_size);

enum class PositionalMode { kSinusoidal, kLearned, kNone };

PositionalMode positional_mode_from_string(const std::string& s);
std::string to_string(PositionalMode m);

// The L x d input matrix plus a validity mask (true = real position) and the
// training target for the sequence.
struct EmbeddedSequence {
  Tensor values;                    // [L x d]
  std::vector<std::uint8_t> mask;   // length L
  std::vector<real> labels;        // one per position (per-position mode) or
                                    // a single sequence label in labels[0]
};

// Looks up one time step's feature ids and concatenates the per-feature rows.
Tensor embed_step(const std::vector<std::size_t>& feature_ids,
                  const std::vector<EmbeddingTable>& tables);

// Full-sequence lookup: ids[t][f] is the id of feature f at step t.
Tensor embed_sequence(const std::vector<std::vector<std::size_t>>& ids,
                      const std::vector<EmbeddingTable>& tables);

// Adds position information to real positions; masked positions stay zero.
// learned_table is consulted only in kLearned mode and must have at least L
// rows.
EmbeddedSequence add_positions(EmbeddedSequence seq, PositionalMode mode,
                               const Tensor* learned_table = nullptr);

// The constant sinusoidal position matrix [L x d].
Tensor sinusoidal_positions(std::size_t L, std::size_t d);

}  // namespace cf
