#pragma once

#include <cstdint>
#include <string>

namespace cf {

// Synthetic long-sequence classification task. Each entity group carries two
// signals:
//   - local: a short run of "burst" event tokens inside the final
//     chunk-sized tail window;
//   - global: a seasonal phase (0 or pi) that shifts the sinusoidal value
//     feature across the whole sequence. Group lengths are full periods, so
//     the multiset of values is phase-invariant and a pooled representation
//     cannot recover the phase.
// label = 1 iff the burst is present AND the phase is positive.
struct SynthConfig {
  std::string out_path;
  std::size_t groups = 2000;
  std::size_t min_len = 36;
  std::size_t max_len = 240;
  std::size_t period = 12;        // lengths are multiples of this
  std::size_t burst_len = 3;
  std::size_t burst_window = 12;  // burst lands in the last burst_window steps
  double noise = 0.05;
  std::uint64_t seed = 7;

  void validate() const;
};

// Writes a CSV with columns: entity,t,event,value,label.
void generate_synthetic(const SynthConfig& cfg);

}  // namespace cf
