#include "chunkformer/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "chunkformer/errors.hpp"
#include "json.hpp"

namespace cf {

using nlohmann::json;

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

long long discretize(double x, double min, double max, double precision) {
  if (precision <= 0) throw ConfigError("discretize: precision must be > 0");
  if (!std::isfinite(x)) throw EncodingError("discretize: non-finite value");
  const double clamped = std::clamp(x, min, max);
  return std::llround(clamped / precision);
}

std::vector<long long> bucketize(std::vector<long long> codes,
                                 std::size_t max_vocab) {
  if (codes.empty()) throw ConfigError("bucketize: empty code distribution");
  if (max_vocab == 0) throw ConfigError("bucketize: max_vocab must be >= 1");
  std::sort(codes.begin(), codes.end());
  const std::size_t n = codes.size();
  std::vector<long long> boundaries;
  for (std::size_t b = 1; b <= max_vocab; ++b) {
    const std::size_t pos = b * n / max_vocab;  // quantile cut, in [0, n]
    if (pos == 0) continue;
    const long long bound = codes[pos - 1];
    if (boundaries.empty() || bound > boundaries.back())
      boundaries.push_back(bound);
  }
  if (boundaries.back() < codes.back()) boundaries.push_back(codes.back());
  return boundaries;
}

std::size_t FeatureEncoder::encode(const std::string& raw) const {
  if (cfg.kind == FeatureKind::kCategorical) {
    auto it = vocab.find(raw);
    return it == vocab.end() ? 0 : it->second;
  }
  double x;
  try {
    x = std::stod(raw);
  } catch (const std::exception&) {
    throw EncodingError("feature '" + cfg.name + "': cannot parse numeric '" +
                        raw + "'");
  }
  if (!std::isfinite(x))
    throw EncodingError("feature '" + cfg.name + "': non-finite value");
  const long long code = discretize(x, min, max, cfg.precision);
  if (bucketed) {
    const auto it =
        std::lower_bound(boundaries.begin(), boundaries.end(), code);
    return static_cast<std::size_t>(it - boundaries.begin()) + 1;
  }
  auto it = code_ids.find(code);
  return it == code_ids.end() ? 0 : it->second;
}

double FeatureEncoder::decode_numeric(std::size_t id) const {
  if (cfg.kind != FeatureKind::kNumeric)
    throw EncodingError("decode_numeric on categorical feature");
  if (id == 0) throw EncodingError("decode_numeric: reserved id 0");
  if (bucketed) {
    const std::size_t b = id - 1;
    if (b >= boundaries.size())
      throw EncodingError("decode_numeric: bucket out of range");
    const long long hi = boundaries[b];
    const long long lo = b == 0 ? std::llround(min / cfg.precision)
                                : boundaries[b - 1] + 1;
    return (static_cast<double>(lo) + static_cast<double>(hi)) / 2.0 *
           cfg.precision;
  }
  for (const auto& [code, cid] : code_ids)
    if (cid == id) return static_cast<double>(code) * cfg.precision;
  throw EncodingError("decode_numeric: unknown id");
}

std::vector<FeatureSpec> FeatureSchema::feature_specs() const {
  std::vector<FeatureSpec> specs;
  for (const auto& f : features)
    specs.push_back({f.cfg.name, f.vocab_size, f.embedding_dim});
  return specs;
}

std::string FeatureSchema::to_json() const {
  json j;
  j["version"] = version;
  j["features"] = json::array();
  for (const auto& f : features) {
    json jf;
    jf["name"] = f.cfg.name;
    jf["kind"] = f.cfg.kind == FeatureKind::kNumeric ? "numeric" : "categorical";
    jf["precision"] = f.cfg.precision;
    jf["embedding_dim"] = f.embedding_dim;
    jf["vocab_size"] = f.vocab_size;
    jf["min"] = f.min;
    jf["max"] = f.max;
    jf["bucketed"] = f.bucketed;
    jf["boundaries"] = f.boundaries;
    json codes = json::array();
    for (const auto& [code, id] : f.code_ids) codes.push_back({code, id});
    jf["code_ids"] = codes;
    jf["vocab"] = json::object();
    for (const auto& [v, id] : f.vocab) jf["vocab"][v] = id;
    j["features"].push_back(jf);
  }
  return j.dump();
}

FeatureSchema FeatureSchema::from_json(const std::string& text) {
  json j = json::parse(text);
  FeatureSchema s;
  s.version = j.at("version").get<int>();
  if (s.version != 1)
    throw CompatibilityError("unsupported schema version " +
                             std::to_string(s.version));
  for (const auto& jf : j.at("features")) {
    FeatureEncoder f;
    f.cfg.name = jf.at("name").get<std::string>();
    f.cfg.kind = jf.at("kind").get<std::string>() == "numeric"
                     ? FeatureKind::kNumeric
                     : FeatureKind::kCategorical;
    f.cfg.precision = jf.at("precision").get<double>();
    f.embedding_dim = jf.at("embedding_dim").get<std::size_t>();
    f.vocab_size = jf.at("vocab_size").get<std::size_t>();
    f.min = jf.at("min").get<double>();
    f.max = jf.at("max").get<double>();
    f.bucketed = jf.at("bucketed").get<bool>();
    f.boundaries = jf.at("boundaries").get<std::vector<long long>>();
    for (const auto& pair : jf.at("code_ids"))
      f.code_ids[pair[0].get<long long>()] = pair[1].get<std::size_t>();
    for (const auto& [k, v] : jf.at("vocab").items())
      f.vocab[k] = v.get<std::size_t>();
    s.features.push_back(std::move(f));
  }
  return s;
}

std::uint64_t FeatureSchema::hash() const {
  const std::string text = to_json();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

// Minimal CSV line splitter with double-quote support.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

}  // namespace

std::vector<RawRecord> read_csv(const DataConfig& cfg) {
  std::ifstream in(cfg.csv_path);
  if (!in) throw IngestionError("cannot open " + cfg.csv_path);
  std::string line;
  if (!std::getline(in, line)) throw IngestionError("empty CSV file");
  const auto header = split_csv_line(line);
  auto find_col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw IngestionError("missing column '" + name + "' in " + cfg.csv_path);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t key_col = find_col(cfg.key_column);
  const std::size_t time_col = find_col(cfg.time_column);
  const std::size_t label_col = find_col(cfg.label_column);
  std::vector<std::size_t> feat_cols;
  for (const auto& f : cfg.features) feat_cols.push_back(find_col(f.name));

  std::vector<RawRecord> records;
  std::size_t order = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw IngestionError("row " + std::to_string(order + 2) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(header.size()));
    RawRecord r;
    r.key = cells[key_col];
    try {
      r.time = std::stod(cells[time_col]);
      r.label = std::stod(cells[label_col]);
    } catch (const std::exception&) {
      throw IngestionError("row " + std::to_string(order + 2) +
                           ": bad time or label value");
    }
    for (std::size_t c : feat_cols) r.raw.push_back(cells[c]);
    r.file_order = order++;
    records.push_back(std::move(r));
  }
  return records;
}

GroupedDataset group_and_order(std::vector<RawRecord> records,
                               std::size_t min_group_size) {
  GroupedDataset ds;
  for (auto& r : records) ds.groups[r.key].push_back(std::move(r));
  for (auto& [key, group] : ds.groups) {
    std::stable_sort(group.begin(), group.end(),
                     [](const RawRecord& a, const RawRecord& b) {
                       return a.time < b.time;
                     });
  }
  for (auto it = ds.groups.begin(); it != ds.groups.end();) {
    if (it->second.size() < min_group_size)
      it = ds.groups.erase(it);
    else
      ++it;
  }
  return ds;
}

void split_groups(GroupedDataset& ds, const SplitSpec& spec,
                  std::uint64_t seed) {
  std::vector<std::string> keys;
  for (const auto& [k, _] : ds.groups) keys.push_back(k);
  std::mt19937_64 rng(seed);
  std::shuffle(keys.begin(), keys.end(), rng);
  const std::size_t total = keys.size();

  std::size_t n_train, n_val, n_test;
  if (spec.counts) {
    const auto& c = *spec.counts;
    if (c[0] + c[1] + c[2] > total)
      throw ConfigError("split counts exceed group count " +
                        std::to_string(total));
    n_train = c[0];
    n_val = c[1];
    n_test = c[2];
  } else if (spec.fractions) {
    const auto& f = *spec.fractions;
    const double sum = f[0] + f[1] + f[2];
    if (f[0] < 0 || f[1] < 0 || f[2] < 0 || std::abs(sum - 1.0) > 1e-9)
      throw ConfigError("split fractions must be nonnegative and sum to 1");
    n_train = static_cast<std::size_t>(std::llround(f[0] * total));
    n_val = static_cast<std::size_t>(std::llround(f[1] * total));
    n_train = std::min(n_train, total);
    n_val = std::min(n_val, total - n_train);
    n_test = total - n_train - n_val;
  } else {
    throw ConfigError("split spec needs counts or fractions");
  }

  ds.assignment.clear();
  std::size_t i = 0;
  for (; i < n_train; ++i) ds.assignment[keys[i]] = Split::kTrain;
  for (; i < n_train + n_val; ++i) ds.assignment[keys[i]] = Split::kVal;
  for (; i < n_train + n_val + n_test; ++i)
    ds.assignment[keys[i]] = Split::kTest;
  // Groups past the requested counts stay unassigned and are not emitted.
}

FeatureSchema build_schema(const GroupedDataset& ds, const DataConfig& cfg) {
  FeatureSchema schema;
  for (std::size_t fi = 0; fi < cfg.features.size(); ++fi) {
    const FeatureConfig& fc = cfg.features[fi];
    FeatureEncoder enc;
    enc.cfg = fc;
    if (fc.kind == FeatureKind::kCategorical) {
      std::map<std::string, std::size_t> counts;
      for (const auto& [key, group] : ds.groups) {
        const auto it = ds.assignment.find(key);
        if (it == ds.assignment.end() || it->second != Split::kTrain) continue;
        for (const auto& r : group) counts[r.raw[fi]]++;
      }
      if (counts.size() <= cfg.max_vocab) {
        std::size_t id = 1;
        for (const auto& [v, _] : counts) enc.vocab[v] = id++;
      } else {
        // Keep the most frequent values; everything else maps to 0.
        std::vector<std::pair<std::string, std::size_t>> by_freq(
            counts.begin(), counts.end());
        std::stable_sort(by_freq.begin(), by_freq.end(),
                         [](const auto& a, const auto& b) {
                           return a.second > b.second;
                         });
        by_freq.resize(cfg.max_vocab);
        std::sort(by_freq.begin(), by_freq.end());
        std::size_t id = 1;
        for (const auto& [v, _] : by_freq) enc.vocab[v] = id++;
      }
      enc.vocab_size = enc.vocab.size() + 1;
    } else {
      std::vector<double> values;
      for (const auto& [key, group] : ds.groups) {
        const auto it = ds.assignment.find(key);
        if (it == ds.assignment.end() || it->second != Split::kTrain) continue;
        for (const auto& r : group) {
          try {
            const double x = std::stod(r.raw[fi]);
            if (std::isfinite(x)) values.push_back(x);
          } catch (const std::exception&) {
            // Unparseable training cells do not contribute to the stats.
          }
        }
      }
      if (values.empty())
        throw ConfigError("feature '" + fc.name +
                          "': no finite training values");
      enc.min = *std::min_element(values.begin(), values.end());
      enc.max = *std::max_element(values.begin(), values.end());
      std::vector<long long> codes;
      codes.reserve(values.size());
      for (double x : values)
        codes.push_back(discretize(x, enc.min, enc.max, fc.precision));
      std::vector<long long> distinct = codes;
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()),
                     distinct.end());
      if (distinct.size() > cfg.max_vocab) {
        enc.bucketed = true;
        enc.boundaries = bucketize(std::move(codes), cfg.max_vocab);
        enc.vocab_size = enc.boundaries.size() + 1;
      } else {
        std::size_t id = 1;
        for (long long c : distinct) enc.code_ids[c] = id++;
        enc.vocab_size = distinct.size() + 1;
      }
    }
    enc.embedding_dim = fc.embedding_dim > 0
                            ? fc.embedding_dim
                            : default_embedding_dim(enc.vocab_size);
    schema.features.push_back(std::move(enc));
  }
  return schema;
}

DatasetManifest encode_dataset(const GroupedDataset& ds,
                               const FeatureSchema& schema,
                               const DataConfig& cfg) {
  DatasetManifest m;
  m.schema = schema;
  for (const auto& [key, group] : ds.groups) {
    const auto it = ds.assignment.find(key);
    if (it == ds.assignment.end()) continue;
    EncodedGroup eg;
    eg.key = key;
    for (const auto& r : group) {
      std::vector<std::size_t> ids(schema.features.size());
      bool bad = false;
      for (std::size_t fi = 0; fi < schema.features.size(); ++fi) {
        try {
          ids[fi] = schema.features[fi].encode(r.raw[fi]);
        } catch (const EncodingError&) {
          if (cfg.bad_value_policy == BadValuePolicy::kDrop) {
            bad = true;
            break;
          }
          ids[fi] = 0;
        }
      }
      if (bad) continue;
      eg.ids.push_back(std::move(ids));
      eg.labels.push_back(static_cast<real>(r.label));
    }
    if (eg.ids.size() < cfg.min_group_size) continue;
    m.shards[it->second].push_back(std::move(eg));
  }
  return m;
}

std::vector<EncodedWindow> window(const EncodedGroup& group, std::size_t L,
                                  PredictionMode mode) {
  if (L == 0) throw ConfigError("window: L must be >= 1");
  std::vector<EncodedWindow> out;
  const std::size_t n = group.ids.size();
  if (n == 0) return out;
  std::size_t start;
  std::size_t count;
  if (n <= L) {
    start = 0;
    count = 1;
  } else {
    count = n / L;
    start = n - count * L;  // tail-aligned; the oldest remainder is dropped
  }
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t b = start + w * (n <= L ? n : L);
    const std::size_t e = n <= L ? n : b + L;
    EncodedWindow win;
    win.ids.assign(group.ids.begin() + b, group.ids.begin() + e);
    if (mode == PredictionMode::kLastPosition) {
      win.labels = {group.labels[e - 1]};
    } else {
      win.labels.assign(group.labels.begin() + b, group.labels.begin() + e);
    }
    out.push_back(std::move(win));
  }
  return out;
}

void save_manifest(const DatasetManifest& m, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  json j;
  j["version"] = m.version;
  j["schema"] = json::parse(m.schema.to_json());
  j["schema_hash"] = m.schema_hash();
  json shards = json::object();
  for (const auto& [split, groups] : m.shards) {
    const std::string name = to_string(split) + ".jsonl";
    shards[to_string(split)] = name;
    std::ofstream out(fs::path(dir) / name);
    for (const auto& g : groups) {
      json jg;
      jg["key"] = g.key;
      jg["ids"] = g.ids;
      jg["labels"] = g.labels;
      out << jg.dump() << "\n";
    }
  }
  j["shards"] = shards;
  std::ofstream out(fs::path(dir) / "manifest.json");
  out << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw IngestionError("cannot open manifest in " + dir);
  json j = json::parse(in);
  DatasetManifest m;
  m.version = j.at("version").get<int>();
  if (m.version != 1)
    throw CompatibilityError("unsupported manifest version " +
                             std::to_string(m.version));
  m.schema = FeatureSchema::from_json(j.at("schema").dump());
  for (const auto& [split_name, file] : j.at("shards").items()) {
    Split split = split_name == "train" ? Split::kTrain
                  : split_name == "val" ? Split::kVal
                                        : Split::kTest;
    std::ifstream shard(fs::path(dir) / file.get<std::string>());
    if (!shard)
      throw IngestionError("missing shard file for split " + split_name);
    std::string line;
    while (std::getline(shard, line)) {
      if (line.empty()) continue;
      json jg = json::parse(line);
      EncodedGroup g;
      g.key = jg.at("key").get<std::string>();
      g.ids = jg.at("ids").get<std::vector<std::vector<std::size_t>>>();
      g.labels = jg.at("labels").get<std::vector<real>>();
      m.shards[split].push_back(std::move(g));
    }
  }
  return m;
}

}  // namespace cf
