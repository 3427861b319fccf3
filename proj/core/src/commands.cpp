#include "chunkformer/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "chunkformer/errors.hpp"
#include "chunkformer/io.hpp"
#include "json.hpp"

namespace cf {

using nlohmann::json;

namespace {

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

}  // namespace

void cmd_synth(const RunConfig& cfg) {
  if (cfg.synth.out_path.empty())
    throw ConfigError("synth.out must name the output CSV");
  ensure_parent(cfg.synth.out_path);
  generate_synthetic(cfg.synth);
  std::cout << "wrote " << cfg.synth.out_path << " (" << cfg.synth.groups
            << " groups)\n";
}

void cmd_preprocess(const RunConfig& cfg) {
  cfg.validate();
  auto records = read_csv(cfg.data);
  GroupedDataset ds = group_and_order(std::move(records), cfg.data.min_group_size);
  split_groups(ds, cfg.data.split, cfg.data.seed ? cfg.data.seed : cfg.seed);
  const FeatureSchema schema = build_schema(ds, cfg.data);
  const DatasetManifest manifest = encode_dataset(ds, schema, cfg.data);
  save_manifest(manifest, cfg.manifest_dir);
  std::size_t n = 0;
  for (const auto& [s, groups] : manifest.shards) n += groups.size();
  std::cout << "wrote manifest to " << cfg.manifest_dir << " (" << n
            << " groups, schema hash " << manifest.schema_hash() << ")\n";
}

namespace {

std::unique_ptr<SequenceClassifier> make_model(const RunConfig& cfg,
                                               const DatasetManifest& m) {
  const auto feats = m.schema.feature_specs();
  if (cfg.model_kind == "mean_pool_baseline")
    return std::make_unique<MeanPoolBaseline>(cfg.model, feats, cfg.seed);
  return std::make_unique<ChunkFormerModel>(cfg.model, feats, cfg.seed);
}

}  // namespace

void cmd_train(const RunConfig& cfg, bool resume) {
  cfg.validate();
  const DatasetManifest manifest = load_manifest(cfg.manifest_dir);
  std::unique_ptr<SequenceClassifier> model;
  std::size_t start_epoch = 0;
  AdamConfig acfg;
  acfg.lr = cfg.train.lr;
  std::unique_ptr<Adam> opt;

  if (resume && std::filesystem::exists(cfg.checkpoint_path)) {
    LoadedCheckpoint ck = load_checkpoint(cfg.checkpoint_path);
    if (ck.schema_hash != manifest.schema_hash())
      throw CompatibilityError("checkpoint schema hash does not match manifest");
    model = std::move(ck.model);
    start_epoch = ck.epoch;
    opt = std::make_unique<Adam>(model->parameters(), acfg);
    if (ck.has_optimizer_state)
      opt->restore(ck.adam_t, std::move(ck.adam_m), std::move(ck.adam_v));
    std::cout << "resuming from epoch " << start_epoch << "\n";
  } else {
    model = make_model(cfg, manifest);
    opt = std::make_unique<Adam>(model->parameters(), acfg);
  }

  const TrainResult result =
      train(*model, *opt, manifest, cfg.model.L, cfg.model.prediction_mode,
            cfg.train, start_epoch);

  {
    ensure_parent(cfg.metrics_path);
    std::ofstream out(cfg.metrics_path);
    if (!out) throw IngestionError("cannot write " + cfg.metrics_path);
    out << result.metrics_log;
  }
  ensure_parent(cfg.checkpoint_path);
  save_checkpoint(cfg.checkpoint_path, *model, manifest.schema_hash(),
                  cfg.train.epochs, opt.get());

  std::cout << "best epoch " << result.best_epoch << " val macro-F1 "
            << result.best_val_macro_f1 << "\n";
  std::cout << "checkpoint: " << cfg.checkpoint_path << "\n";
  std::cout << "metrics:    " << cfg.metrics_path << "\n";
}

void cmd_eval(const std::string& checkpoint_path,
              const std::string& manifest_dir, const std::string& split_name,
              const std::string& report_path) {
  Split split;
  if (split_name == "train") split = Split::kTrain;
  else if (split_name == "val") split = Split::kVal;
  else if (split_name == "test") split = Split::kTest;
  else throw ConfigError("unknown split: " + split_name);

  const DatasetManifest manifest = load_manifest(manifest_dir);
  LoadedCheckpoint ck = load_checkpoint(checkpoint_path);
  if (ck.schema_hash != manifest.schema_hash())
    throw CompatibilityError(
        "checkpoint schema hash does not match manifest schema");

  const EvalReport report =
      evaluate(*ck.model, manifest, split, ck.config.L,
               ck.config.prediction_mode);
  json j = json::parse(report.to_json());
  j["split"] = split_name;
  if (ck.kind == "chunkformer") {
    const FootprintReport fp = attention_footprint(ck.config);
    j["footprint"] = {{"per_stage", fp.per_stage},
                      {"peak", fp.peak},
                      {"full_attention", fp.full_attention}};
  }
  const std::string text = j.dump(2);
  std::cout << text << "\n";
  if (!report_path.empty()) {
    ensure_parent(report_path);
    std::ofstream out(report_path);
    out << text << "\n";
  }
}

void cmd_bench(const RunConfig& cfg) {
  const auto rows = sweep(cfg.bench.lengths, cfg.bench.variants,
                          cfg.bench.d_model, cfg.bench.heads,
                          cfg.bench.repetitions, cfg.bench.include_backward);
  for (const auto& r : rows) {
    if (r.footprint.measured_per_stage != r.footprint.predicted_per_stage)
      throw NumericError("bench: measured footprint deviates from prediction");
  }
  const std::string table = render_table(rows);
  std::cout << table;
  ensure_parent(cfg.bench.out_prefix);
  {
    std::ofstream out(cfg.bench.out_prefix + ".tsv");
    out << table;
  }
  {
    std::ofstream out(cfg.bench.out_prefix + ".json");
    out << render_json(rows) << "\n";
  }
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const IngestionError*>(&e)) return 3;
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  if (dynamic_cast<const CompatibilityError*>(&e)) return 5;
  return 1;
}

}  // namespace cf
