#pragma once

#include <string>
#include <vector>

#include "chunkformer/chunkformer.hpp"

namespace cf {

struct BenchCase {
  std::size_t L = 0;
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::vector<std::size_t> stage_chunk_sizes;  // empty = full attention
  std::size_t batch = 1;
  std::size_t repetitions = 5;  // >= 3 for timing
  bool include_backward = false;

  bool full_attention() const { return stage_chunk_sizes.empty(); }
  void validate() const;
};

struct FootprintMeasurement {
  std::vector<long long> measured_per_stage;  // per head, per batch item
  long long measured_peak = 0;
  std::vector<long long> predicted_per_stage;
  long long predicted_peak = 0;
  long long full_reference = 0;  // L^2
};

struct TimingMeasurement {
  double median_ms = 0;
  double min_ms = 0;
  double max_ms = 0;
};

struct BenchRow {
  BenchCase c;
  FootprintMeasurement footprint;
  TimingMeasurement timing;
};

// Instrumented forward pass; measured counts must match the analytic k_s * L
// prediction exactly.
FootprintMeasurement measure_footprint(const BenchCase& c);

// Median wall time over repetitions after one warm-up pass.
TimingMeasurement measure_time(const BenchCase& c);

std::vector<BenchRow> sweep(const std::vector<std::size_t>& lengths,
                            const std::vector<std::vector<std::size_t>>& variants,
                            std::size_t d_model, std::size_t heads,
                            std::size_t repetitions, bool include_backward);

// Tab-separated report plus a text sparkline of the footprint ratio.
std::string render_table(const std::vector<BenchRow>& rows);
std::string render_json(const std::vector<BenchRow>& rows);

}  // namespace cf
