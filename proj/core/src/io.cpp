#include "chunkformer/io.hpp"

#include <fstream>

#include "chunkformer/errors.hpp"
#include "json.hpp"

namespace cf {

using nlohmann::json;

namespace {

json config_to_json_obj(const ChunkFormerConfig& cfg) {
  json j;
  j["stages"] = cfg.stage_chunk_sizes;
  j["L"] = cfg.L;
  j["d_model"] = cfg.d_model;
  j["heads"] = cfg.heads;
  j["d_ff"] = cfg.d_ff;
  j["head_hidden"] = cfg.head_hidden;
  j["dropout"] = cfg.dropout;
  j["positional"] = to_string(cfg.positional);
  j["prediction_mode"] = to_string(cfg.prediction_mode);
  return j;
}

ChunkFormerConfig config_from_json_obj(const json& j) {
  ChunkFormerConfig cfg;
  cfg.stage_chunk_sizes = j.at("stages").get<std::vector<std::size_t>>();
  cfg.L = j.at("L").get<std::size_t>();
  cfg.d_model = j.at("d_model").get<std::size_t>();
  cfg.heads = j.at("heads").get<std::size_t>();
  cfg.d_ff = j.value("d_ff", std::size_t{0});
  cfg.head_hidden = j.value("head_hidden", std::size_t{0});
  cfg.dropout = j.value("dropout", real{0.1});
  cfg.positional = positional_mode_from_string(
      j.value("positional", std::string("sinusoidal")));
  cfg.prediction_mode = prediction_mode_from_string(
      j.value("prediction_mode", std::string("last_position")));
  return cfg;
}

}  // namespace

std::string model_config_to_json(const ChunkFormerConfig& cfg) {
  return config_to_json_obj(cfg).dump();
}

ChunkFormerConfig model_config_from_json(const std::string& text) {
  return config_from_json_obj(json::parse(text));
}

void save_checkpoint(const std::string& path, SequenceClassifier& model,
                     std::uint64_t schema_hash, std::size_t epoch,
                     const Adam* opt) {
  json j;
  j["version"] = 1;
  j["kind"] = model.kind();
  j["schema_hash"] = schema_hash;
  j["epoch"] = epoch;

  const ChunkFormerConfig* cfg = nullptr;
  const std::vector<FeatureSpec>* feats = nullptr;
  if (auto* m = dynamic_cast<ChunkFormerModel*>(&model)) {
    cfg = &m->config();
    feats = &m->features();
  } else if (auto* b = dynamic_cast<MeanPoolBaseline*>(&model)) {
    cfg = &b->config();
    feats = &b->features();
  } else {
    throw CompatibilityError("unknown model kind: " + model.kind());
  }
  j["config"] = config_to_json_obj(*cfg);
  json jf = json::array();
  for (const auto& f : *feats)
    jf.push_back({{"name", f.name},
                  {"vocab_size", f.vocab_size},
                  {"embedding_dim", f.embedding_dim}});
  j["features"] = jf;

  json weights = json::array();
  for (const Tensor& p : model.parameters()) {
    json jw;
    jw["shape"] = p.shape();
    jw["data"] = std::vector<real>(p.data().begin(), p.data().end());
    weights.push_back(std::move(jw));
  }
  j["weights"] = std::move(weights);

  if (opt != nullptr) {
    json jo;
    jo["t"] = opt->step_count();
    jo["m"] = opt->moment1();
    jo["v"] = opt->moment2();
    j["optimizer"] = std::move(jo);
  }

  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write checkpoint " + path);
  out << j.dump() << "\n";
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open checkpoint " + path);
  json j = json::parse(in, nullptr, /*allow_exceptions=*/true);
  LoadedCheckpoint ck;
  const int version = j.at("version").get<int>();
  if (version != 1)
    throw CompatibilityError("unsupported checkpoint version " +
                             std::to_string(version));
  ck.kind = j.at("kind").get<std::string>();
  ck.schema_hash = j.at("schema_hash").get<std::uint64_t>();
  ck.epoch = j.at("epoch").get<std::size_t>();
  ck.config = config_from_json_obj(j.at("config"));
  for (const auto& jf : j.at("features"))
    ck.features.push_back({jf.at("name").get<std::string>(),
                           jf.at("vocab_size").get<std::size_t>(),
                           jf.at("embedding_dim").get<std::size_t>()});

  if (ck.kind == "chunkformer") {
    ck.model = std::make_unique<ChunkFormerModel>(ck.config, ck.features, 0);
  } else if (ck.kind == "mean_pool_baseline") {
    ck.model = std::make_unique<MeanPoolBaseline>(ck.config, ck.features, 0);
  } else {
    throw CompatibilityError("unknown checkpoint model kind: " + ck.kind);
  }

  auto params = ck.model->parameters();
  const auto& weights = j.at("weights");
  if (weights.size() != params.size())
    throw CompatibilityError("checkpoint weight count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto shape = weights[i].at("shape").get<std::vector<std::size_t>>();
    if (shape != params[i].shape())
      throw CompatibilityError("checkpoint weight shape mismatch at index " +
                               std::to_string(i));
    const auto data = weights[i].at("data").get<std::vector<real>>();
    auto dst = params[i].mutable_data();
    std::copy(data.begin(), data.end(), dst.begin());
  }

  if (j.contains("optimizer")) {
    ck.has_optimizer_state = true;
    ck.adam_t = j["optimizer"].at("t").get<long long>();
    ck.adam_m =
        j["optimizer"].at("m").get<std::vector<std::vector<real>>>();
    ck.adam_v =
        j["optimizer"].at("v").get<std::vector<std::vector<real>>>();
  }
  return ck;
}

}  // namespace cf
