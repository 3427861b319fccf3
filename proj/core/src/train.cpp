#include "chunkformer/train.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "chunkformer/errors.hpp"
#include "json.hpp"

namespace cf {

using nlohmann::json;

void TrainConfig::validate() const {
  if (lr <= real{0}) throw ConfigError("learning rate must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (report_every < 1) throw ConfigError("report_every must be >= 1");
  if (pos_weight && *pos_weight <= real{0})
    throw ConfigError("pos_weight must be > 0");
}

std::string EvalReport::to_json() const {
  json j;
  j["loss"] = loss;
  if (std::isnan(auc))
    j["auc"] = nullptr;
  else
    j["auc"] = auc;
  j["macro_f1"] = f1.macro_f1;
  j["precision_pos"] = f1.positive.precision;
  j["recall_pos"] = f1.positive.recall;
  j["precision_neg"] = f1.negative.precision;
  j["recall_neg"] = f1.negative.recall;
  j["n_windows"] = n_windows;
  return j.dump();
}

namespace {

std::vector<EncodedWindow> split_windows(const DatasetManifest& manifest,
                                         Split split, std::size_t L,
                                         PredictionMode mode) {
  std::vector<EncodedWindow> out;
  const auto it = manifest.shards.find(split);
  if (it == manifest.shards.end()) return out;
  for (const auto& g : it->second) {
    auto ws = window(g, L, mode);
    out.insert(out.end(), std::make_move_iterator(ws.begin()),
               std::make_move_iterator(ws.end()));
  }
  return out;
}

Tensor window_loss(SequenceClassifier& model, const EncodedWindow& w,
                   bool training, std::mt19937_64* rng,
                   const std::optional<real>& pos_weight) {
  Tensor logits = model.forward(w, training, rng);
  Tensor loss = bce_with_logits(logits, w.labels);
  if (pos_weight) {
    // Class weighting: scale the whole window loss by the mean per-target
    // weight (w for positives, 1 for negatives).
    real wsum = 0;
    for (real t : w.labels) wsum += t > real{0.5} ? *pos_weight : real{1};
    loss = scale(loss, wsum / static_cast<real>(w.labels.size()));
  }
  return loss;
}

}  // namespace

void score_split(SequenceClassifier& model, const DatasetManifest& manifest,
                 Split split, std::size_t L, PredictionMode mode,
                 std::vector<double>& scores, std::vector<int>& labels,
                 double* mean_loss) {
  scores.clear();
  labels.clear();
  const auto windows = split_windows(manifest, split, L, mode);
  double loss_sum = 0;
  for (const auto& w : windows) {
    Tensor logits = model.forward(w, /*training=*/false);
    if (mean_loss != nullptr)
      loss_sum += bce_with_logits(logits, w.labels).item();
    Tensor probs = sigmoid(logits);
    const auto pv = probs.data();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      scores.push_back(static_cast<double>(pv[i]));
      labels.push_back(w.labels[i] > real{0.5} ? 1 : 0);
    }
  }
  if (mean_loss != nullptr)
    *mean_loss = windows.empty() ? 0.0 : loss_sum / windows.size();
}

EvalReport evaluate(SequenceClassifier& model, const DatasetManifest& manifest,
                    Split split, std::size_t L, PredictionMode mode) {
  std::vector<double> scores;
  std::vector<int> labels;
  double mean_loss = 0;
  score_split(model, manifest, split, L, mode, scores, labels, &mean_loss);
  EvalReport r;
  r.loss = mean_loss;
  r.n_windows = scores.size();
  if (scores.empty()) {
    r.auc = std::nan("");
    return r;
  }
  std::vector<int> preds(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    preds[i] = scores[i] >= 0.5 ? 1 : 0;  // logit threshold 0
  try {
    r.auc = auc(scores, labels);
  } catch (const MetricError&) {
    r.auc = std::nan("");
  }
  r.f1 = macro_f1(preds, labels);
  return r;
}

TrainResult train(SequenceClassifier& model, Adam& opt,
                  const DatasetManifest& manifest, std::size_t L,
                  PredictionMode mode, const TrainConfig& tcfg,
                  std::size_t start_epoch) {
  tcfg.validate();
  auto train_windows = split_windows(manifest, Split::kTrain, L, mode);
  if (train_windows.empty())
    throw ConfigError("train: no training windows in manifest");

  std::mt19937_64 dropout_rng(tcfg.seed * 0x9e3779b97f4a7c15ULL + 1);
  TrainResult result;
  std::ostringstream log;

  std::vector<std::vector<real>> best_params;
  auto params = model.parameters();

  for (std::size_t epoch = start_epoch; epoch < tcfg.epochs; ++epoch) {
    // Per-epoch shuffle stream so resumed runs see the same order.
    std::mt19937_64 shuffle_rng(tcfg.seed * 0x9e3779b97f4a7c15ULL + 1000 +
                                epoch);
    std::vector<std::size_t> order(train_windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0;
    std::size_t n_batches = 0;
    for (std::size_t b = 0; b < order.size(); b += tcfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + tcfg.batch_size);
      Tensor batch_loss;
      for (std::size_t i = b; i < e; ++i) {
        Tensor l = window_loss(model, train_windows[order[i]], true,
                               &dropout_rng, tcfg.pos_weight);
        batch_loss = batch_loss.defined() ? add(batch_loss, l) : l;
      }
      batch_loss = scale(batch_loss, real{1} / static_cast<real>(e - b));
      const double lv = batch_loss.item();
      if (std::isnan(lv)) {
        double gnorm = 0;
        for (const auto& p : params)
          for (real g : p.grad()) gnorm += static_cast<double>(g) * g;
        throw NumericError("NaN training loss at epoch " +
                           std::to_string(epoch + 1) + "; lr=" +
                           std::to_string(static_cast<double>(tcfg.lr)) +
                           ", last grad norm=" +
                           std::to_string(std::sqrt(gnorm)));
      }
      epoch_loss += lv;
      ++n_batches;
      backward(batch_loss);
      opt.step();
      opt.zero_grad();
    }
    epoch_loss /= std::max<std::size_t>(n_batches, 1);

    EpochReport er;
    er.epoch = epoch + 1;
    er.train_loss = epoch_loss;
    er.val = evaluate(model, manifest, Split::kVal, L, mode);
    result.epochs.push_back(er);

    if ((epoch + 1 - start_epoch) % tcfg.report_every == 0 ||
        epoch + 1 == tcfg.epochs) {
      json j;
      j["epoch"] = er.epoch;
      j["train_loss"] = er.train_loss;
      j["val"] = json::parse(er.val.to_json());
      log << j.dump() << "\n";
    }

    if (result.best_epoch == 0 ||
        er.val.f1.macro_f1 > result.best_val_macro_f1) {
      result.best_epoch = er.epoch;
      result.best_val_macro_f1 = er.val.f1.macro_f1;
      best_params.clear();
      for (const auto& p : params)
        best_params.emplace_back(p.data().begin(), p.data().end());
    }
  }

  // Leave the model at its best validation epoch.
  if (!best_params.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto dst = params[i].mutable_data();
      std::copy(best_params[i].begin(), best_params[i].end(), dst.begin());
    }
  }
  result.metrics_log = log.str();
  return result;
}

}  // namespace cf
