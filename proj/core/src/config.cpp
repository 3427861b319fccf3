#include "chunkformer/config.hpp"

#include <fstream>

#include "chunkformer/errors.hpp"
#include "chunkformer/io.hpp"
#include "json.hpp"

namespace cf {

using nlohmann::json;

void RunConfig::validate() const {
  if (version != 1)
    throw ConfigError("unsupported config version " + std::to_string(version));
  if (model_kind != "chunkformer" && model_kind != "mean_pool_baseline")
    throw ConfigError("unknown model kind: " + model_kind);
  model.validate();
  train.validate();
  if (data.features.empty())
    throw ConfigError("data.features must not be empty");
  for (const auto& f : data.features) {
    if (f.kind == FeatureKind::kNumeric && f.precision <= 0)
      throw ConfigError("feature '" + f.name + "': precision must be > 0");
  }
  if (data.max_vocab == 0) throw ConfigError("max_vocab must be >= 1");
  if (!data.split.counts && !data.split.fractions)
    throw ConfigError("data.split needs counts or fractions");
}

namespace {

json data_to_json(const DataConfig& d) {
  json j;
  j["csv"] = d.csv_path;
  j["key_column"] = d.key_column;
  j["time_column"] = d.time_column;
  j["label_column"] = d.label_column;
  json feats = json::array();
  for (const auto& f : d.features) {
    json jf;
    jf["name"] = f.name;
    jf["kind"] = f.kind == FeatureKind::kNumeric ? "numeric" : "categorical";
    jf["precision"] = f.precision;
    jf["embedding_dim"] = f.embedding_dim;
    feats.push_back(jf);
  }
  j["features"] = feats;
  j["max_vocab"] = d.max_vocab;
  j["min_group_size"] = d.min_group_size;
  if (d.split.counts) j["split_counts"] = *d.split.counts;
  if (d.split.fractions) j["split_fractions"] = *d.split.fractions;
  j["bad_value_policy"] =
      d.bad_value_policy == BadValuePolicy::kDrop ? "drop" : "zero";
  return j;
}

DataConfig data_from_json(const json& j) {
  DataConfig d;
  d.csv_path = j.value("csv", std::string());
  d.key_column = j.at("key_column").get<std::string>();
  d.time_column = j.at("time_column").get<std::string>();
  d.label_column = j.at("label_column").get<std::string>();
  for (const auto& jf : j.at("features")) {
    FeatureConfig f;
    f.name = jf.at("name").get<std::string>();
    f.kind = jf.at("kind").get<std::string>() == "numeric"
                 ? FeatureKind::kNumeric
                 : FeatureKind::kCategorical;
    f.precision = jf.value("precision", 0.001);
    f.embedding_dim = jf.value("embedding_dim", std::size_t{0});
    d.features.push_back(std::move(f));
  }
  d.max_vocab = j.value("max_vocab", std::size_t{10000});
  d.min_group_size = j.value("min_group_size", std::size_t{2});
  if (j.contains("split_counts"))
    d.split.counts = j["split_counts"].get<std::array<std::size_t, 3>>();
  if (j.contains("split_fractions"))
    d.split.fractions = j["split_fractions"].get<std::array<double, 3>>();
  d.bad_value_policy = j.value("bad_value_policy", std::string("drop")) == "zero"
                           ? BadValuePolicy::kZero
                           : BadValuePolicy::kDrop;
  return d;
}

}  // namespace

std::string RunConfig::to_json() const {
  json j;
  j["version"] = version;
  j["seed"] = seed;
  j["data"] = data_to_json(data);
  j["manifest_dir"] = manifest_dir;
  j["model_kind"] = model_kind;
  j["model"] = json::parse(model_config_to_json(model));
  json jt;
  jt["lr"] = train.lr;
  jt["epochs"] = train.epochs;
  jt["batch_size"] = train.batch_size;
  jt["seed"] = train.seed;
  jt["report_every"] = train.report_every;
  if (train.pos_weight) jt["pos_weight"] = *train.pos_weight;
  j["train"] = jt;
  j["checkpoint_path"] = checkpoint_path;
  j["metrics_path"] = metrics_path;
  json js;
  js["out"] = synth.out_path;
  js["groups"] = synth.groups;
  js["min_len"] = synth.min_len;
  js["max_len"] = synth.max_len;
  js["period"] = synth.period;
  js["burst_len"] = synth.burst_len;
  js["burst_window"] = synth.burst_window;
  js["noise"] = synth.noise;
  js["seed"] = synth.seed;
  j["synth"] = js;
  json jb;
  jb["lengths"] = bench.lengths;
  jb["variants"] = bench.variants;
  jb["d_model"] = bench.d_model;
  jb["heads"] = bench.heads;
  jb["repetitions"] = bench.repetitions;
  jb["include_backward"] = bench.include_backward;
  jb["out_prefix"] = bench.out_prefix;
  j["bench"] = jb;
  return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig c;
  try {
    c.version = j.value("version", 1);
    c.seed = j.value("seed", std::uint64_t{7});
    if (j.contains("data")) c.data = data_from_json(j["data"]);
    c.manifest_dir = j.value("manifest_dir", std::string("manifest"));
    c.model_kind = j.value("model_kind", std::string("chunkformer"));
    if (j.contains("model"))
      c.model = model_config_from_json(j["model"].dump());
    if (j.contains("train")) {
      const auto& jt = j["train"];
      c.train.lr = jt.value("lr", real{5e-4});
      c.train.epochs = jt.value("epochs", std::size_t{10});
      c.train.batch_size = jt.value("batch_size", std::size_t{32});
      c.train.seed = jt.value("seed", std::uint64_t{0});
      c.train.report_every = jt.value("report_every", std::size_t{1});
      if (jt.contains("pos_weight"))
        c.train.pos_weight = jt["pos_weight"].get<real>();
    }
    c.checkpoint_path = j.value("checkpoint_path", c.checkpoint_path);
    c.metrics_path = j.value("metrics_path", c.metrics_path);
    if (j.contains("synth")) {
      const auto& js = j["synth"];
      c.synth.out_path = js.value("out", std::string());
      c.synth.groups = js.value("groups", std::size_t{2000});
      c.synth.min_len = js.value("min_len", std::size_t{36});
      c.synth.max_len = js.value("max_len", std::size_t{240});
      c.synth.period = js.value("period", std::size_t{12});
      c.synth.burst_len = js.value("burst_len", std::size_t{3});
      c.synth.burst_window = js.value("burst_window", std::size_t{12});
      c.synth.noise = js.value("noise", 0.05);
      c.synth.seed = js.value("seed", std::uint64_t{7});
    }
    if (j.contains("bench")) {
      const auto& jb = j["bench"];
      c.bench.lengths =
          jb.value("lengths", std::vector<std::size_t>{180, 240, 480, 720});
      if (jb.contains("variants"))
        c.bench.variants =
            jb["variants"].get<std::vector<std::vector<std::size_t>>>();
      c.bench.d_model = jb.value("d_model", std::size_t{32});
      c.bench.heads = jb.value("heads", std::size_t{4});
      c.bench.repetitions = jb.value("repetitions", std::size_t{5});
      c.bench.include_backward = jb.value("include_backward", false);
      c.bench.out_prefix = jb.value("out_prefix", std::string("bench_report"));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json(text);
}

}  // namespace cf
