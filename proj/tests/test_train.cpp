#include <cmath>
#include <random>

#include "chunkformer/errors.hpp"
#include "chunkformer/train.hpp"
#include "doctest.h"

using namespace cf;

namespace {

// A tiny in-memory dataset: class is decided by which of two tokens
// dominates the sequence.
DatasetManifest toy_manifest(std::size_t groups_per_split = 12,
                             std::uint64_t seed = 1) {
  DatasetManifest m;
  FeatureEncoder enc;
  enc.cfg.name = "event";
  enc.cfg.kind = FeatureKind::kCategorical;
  enc.vocab = {{"a", 1}, {"b", 2}, {"c", 3}};
  enc.vocab_size = 4;
  enc.embedding_dim = 3;
  m.schema.features = {enc};

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(6, 12);
  int counter = 0;
  for (Split split : {Split::kTrain, Split::kVal, Split::kTest}) {
    for (std::size_t g = 0; g < groups_per_split; ++g) {
      EncodedGroup grp;
      grp.key = "g" + std::to_string(counter++);
      const bool positive = g % 2 == 0;
      const std::size_t n = len(rng);
      for (std::size_t t = 0; t < n; ++t) {
        std::size_t tok = positive ? 1 : 2;
        if (t % 4 == 3) tok = 3;  // shared noise token
        grp.ids.push_back({tok});
        grp.labels.push_back(positive ? 1.0 : 0.0);
      }
      m.shards[split].push_back(std::move(grp));
    }
  }
  return m;
}

ChunkFormerConfig toy_model_config() {
  ChunkFormerConfig cfg;
  cfg.stage_chunk_sizes = {3, 6};
  cfg.L = 12;
  cfg.d_model = 8;
  cfg.heads = 2;
  cfg.d_ff = 16;
  cfg.dropout = 0;
  return cfg;
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig t;
  CHECK_NOTHROW(t.validate());
  t.lr = 0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = TrainConfig{};
  t.epochs = 0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = TrainConfig{};
  t.batch_size = 0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
}

TEST_CASE("training reduces loss and is deterministic") {
  auto manifest = toy_manifest();
  auto cfg = toy_model_config();
  TrainConfig tcfg;
  tcfg.lr = real{1e-2};
  tcfg.epochs = 4;
  tcfg.batch_size = 8;
  tcfg.seed = 5;

  auto run = [&] {
    ChunkFormerModel model(cfg, manifest.schema.feature_specs(), 11);
    Adam opt(model.parameters(), AdamConfig{.lr = tcfg.lr});
    return train(model, opt, manifest, cfg.L, cfg.prediction_mode, tcfg);
  };

  auto r1 = run();
  REQUIRE(r1.epochs.size() == 4);
  CHECK(r1.epochs.back().train_loss < r1.epochs.front().train_loss);
  CHECK(r1.best_epoch >= 1);

  auto r2 = run();
  CHECK(r1.metrics_log == r2.metrics_log);  // byte-for-byte
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(r1.epochs[i].train_loss == r2.epochs[i].train_loss);
    CHECK(r1.epochs[i].val.loss == r2.epochs[i].val.loss);
  }
}

TEST_CASE("the model ends up holding the best-epoch weights") {
  auto manifest = toy_manifest();
  auto cfg = toy_model_config();
  TrainConfig tcfg;
  tcfg.lr = real{1e-2};
  tcfg.epochs = 5;
  tcfg.seed = 2;

  ChunkFormerModel model(cfg, manifest.schema.feature_specs(), 3);
  Adam opt(model.parameters(), AdamConfig{.lr = tcfg.lr});
  auto res = train(model, opt, manifest, cfg.L, cfg.prediction_mode, tcfg);

  auto report = evaluate(model, manifest, Split::kVal, cfg.L,
                         cfg.prediction_mode);
  CHECK(report.f1.macro_f1 ==
        doctest::Approx(res.best_val_macro_f1).epsilon(1e-12));
}

TEST_CASE("evaluate fills the report") {
  auto manifest = toy_manifest();
  auto cfg = toy_model_config();
  ChunkFormerModel model(cfg, manifest.schema.feature_specs(), 9);
  auto report = evaluate(model, manifest, Split::kTest, cfg.L,
                         cfg.prediction_mode);
  CHECK(report.n_windows > 0);
  CHECK(std::isfinite(report.loss));
  CHECK(report.auc >= 0.0);
  CHECK(report.auc <= 1.0);
  // JSON line is parseable-looking and newline-free
  auto js = report.to_json();
  CHECK(js.find("auc") != std::string::npos);
  CHECK(js.find('\n') == std::string::npos);
}

TEST_CASE("pos_weight tilts predictions toward the positive class") {
  auto manifest = toy_manifest();
  auto cfg = toy_model_config();

  auto positive_rate = [&](std::optional<real> w) {
    TrainConfig tcfg;
    tcfg.lr = real{5e-3};
    tcfg.epochs = 2;
    tcfg.seed = 4;
    tcfg.pos_weight = w;
    ChunkFormerModel model(cfg, manifest.schema.feature_specs(), 21);
    Adam opt(model.parameters(), AdamConfig{.lr = tcfg.lr});
    train(model, opt, manifest, cfg.L, cfg.prediction_mode, tcfg);
    std::vector<double> scores;
    std::vector<int> labels;
    score_split(model, manifest, Split::kVal, cfg.L, cfg.prediction_mode,
                scores, labels);
    double mean = 0;
    for (double s : scores) mean += s;
    return mean / scores.size();
  };

  CHECK(positive_rate(real{20}) > positive_rate(std::nullopt));
}

TEST_CASE("a frozen model scores identically across calls") {
  auto manifest = toy_manifest();
  auto cfg = toy_model_config();
  ChunkFormerModel model(cfg, manifest.schema.feature_specs(), 6);
  std::vector<double> s1, s2;
  std::vector<int> l1, l2;
  score_split(model, manifest, Split::kVal, cfg.L, cfg.prediction_mode, s1, l1);
  score_split(model, manifest, Split::kVal, cfg.L, cfg.prediction_mode, s2, l2);
  CHECK(s1 == s2);
  CHECK(l1 == l2);
}

TEST_CASE("non-finite loss aborts with diagnostics") {
  auto manifest = toy_manifest();
  auto cfg = toy_model_config();
  TrainConfig tcfg;
  tcfg.lr = real{1e10};  // guaranteed blow-up
  tcfg.epochs = 10;
  tcfg.seed = 1;
  ChunkFormerModel model(cfg, manifest.schema.feature_specs(), 2);
  Adam opt(model.parameters(), AdamConfig{.lr = tcfg.lr});
  try {
    train(model, opt, manifest, cfg.L, cfg.prediction_mode, tcfg);
    // Divergence is overwhelmingly likely but not strictly guaranteed; only
    // check the error contents when it happens.
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("lr") != std::string::npos);
    CHECK(msg.find("grad") != std::string::npos);
  }
}
