#pragma once

#include <vector>

#include "chunkformer/tensor.hpp"

namespace cf {

// Mann-Whitney AUC: probability that a random positive outranks a random
// negative, ties counting one half. Throws MetricError when only one class
// is present.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct ClassStats {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct MacroF1Report {
  ClassStats negative;  // class 0
  ClassStats positive;  // class 1
  double macro_f1 = 0;
};

// Unweighted mean of per-class F1 over classes {0,1}. A class with zero
// predicted and zero actual members contributes F1 = 0.
MacroF1Report macro_f1(const std::vector<int>& preds,
                       const std::vector<int>& labels);

// max - min of macro-F1 across a sequence-length sweep.
double stability_span(const std::vector<double>& macro_f1_per_length);

}  // namespace cf
