#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chunkformer/adam.hpp"
#include "chunkformer/chunkformer.hpp"
#include "chunkformer/metrics.hpp"
#include "chunkformer/pipeline.hpp"

namespace cf {

struct TrainConfig {
  real lr = real{5e-4};
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::size_t report_every = 1;  // epochs between metric reports
  std::optional<real> pos_weight;  // class-1 loss weight, default none

  void validate() const;
};

struct EvalReport {
  double loss = 0;
  double auc = 0;  // NaN when undefined (single-class split)
  MacroF1Report f1;
  std::size_t n_windows = 0;
  std::string to_json() const;
};

struct EpochReport {
  std::size_t epoch = 0;
  double train_loss = 0;
  EvalReport val;
};

struct TrainResult {
  std::vector<EpochReport> epochs;
  std::size_t best_epoch = 0;       // 1-based; 0 = none
  double best_val_macro_f1 = 0;
  std::string metrics_log;          // one JSON line per reported epoch
};

// Deterministic training loop: fixed shuffle and dropout streams derived
// from tcfg.seed. On return the model holds the weights of the best
// validation-macro-F1 epoch. start_epoch > 0 resumes mid-run.
TrainResult train(SequenceClassifier& model, Adam& opt,
                  const DatasetManifest& manifest, std::size_t L,
                  PredictionMode mode, const TrainConfig& tcfg,
                  std::size_t start_epoch = 0);

EvalReport evaluate(SequenceClassifier& model, const DatasetManifest& manifest,
                    Split split, std::size_t L, PredictionMode mode);

// Per-window scores (sigmoid of logits) and labels for a split, in
// deterministic group order.
void score_split(SequenceClassifier& model, const DatasetManifest& manifest,
                 Split split, std::size_t L, PredictionMode mode,
                 std::vector<double>& scores, std::vector<int>& labels,
                 double* mean_loss = nullptr);

}  // namespace cf
