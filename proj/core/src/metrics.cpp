#include "chunkformer/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "chunkformer/errors.hpp"

namespace cf {

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw DimensionError("auc: scores/labels length mismatch");
  std::size_t npos = 0, nneg = 0;
  for (int l : labels) (l ? npos : nneg)++;
  if (npos == 0 || nneg == 0)
    throw MetricError("auc: both classes must be present");

  // Rank-sum with average ranks for ties.
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  double pos_rank_sum = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]]) pos_rank_sum += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(npos), nn = static_cast<double>(nneg);
  return (pos_rank_sum - np * (np + 1) / 2.0) / (np * nn);
}

namespace {

ClassStats class_stats(const std::vector<int>& preds,
                       const std::vector<int>& labels, int cls) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == cls, a = labels[i] == cls;
    if (p && a) ++tp;
    else if (p && !a) ++fp;
    else if (!p && a) ++fn;
  }
  ClassStats s;
  s.precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
  s.recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
  s.f1 = (s.precision + s.recall > 0)
             ? 2 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

}  // namespace

MacroF1Report macro_f1(const std::vector<int>& preds,
                       const std::vector<int>& labels) {
  if (preds.size() != labels.size())
    throw DimensionError("macro_f1: preds/labels length mismatch");
  if (preds.empty()) throw MetricError("macro_f1: empty input");
  MacroF1Report r;
  r.negative = class_stats(preds, labels, 0);
  r.positive = class_stats(preds, labels, 1);
  r.macro_f1 = (r.negative.f1 + r.positive.f1) / 2.0;
  return r;
}

double stability_span(const std::vector<double>& macro_f1_per_length) {
  if (macro_f1_per_length.empty())
    throw MetricError("stability_span: empty input");
  const auto [mn, mx] = std::minmax_element(macro_f1_per_length.begin(),
                                            macro_f1_per_length.end());
  return *mx - *mn;
}

}  // namespace cf
