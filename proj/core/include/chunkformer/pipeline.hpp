#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chunkformer/chunkformer.hpp"

namespace cf {

enum class FeatureKind { kCategorical, kNumeric };
enum class BadValuePolicy { kDrop, kZero };

struct FeatureConfig {
  std::string name;
  FeatureKind kind = FeatureKind::kCategorical;
  double precision = 0.001;      // numeric only
  std::size_t embedding_dim = 0; // 0 = default rule
};

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split s);

struct SplitSpec {
  // Either absolute counts or fractions for (train, val, test).
  std::optional<std::array<std::size_t, 3>> counts;
  std::optional<std::array<double, 3>> fractions;
};

struct DataConfig {
  std::string csv_path;
  std::string key_column;
  std::string time_column;
  std::string label_column;
  std::vector<FeatureConfig> features;
  std::size_t max_vocab = 10000;
  std::size_t min_group_size = 2;
  SplitSpec split;
  BadValuePolicy bad_value_policy = BadValuePolicy::kDrop;
  std::uint64_t seed = 0;
};

// quasi-integer code = round(clamp(x, min, max) / precision)
long long discretize(double x, double min, double max, double precision);

// Quantile bucket boundaries (inclusive upper bounds in code space) giving
// at most max_vocab buckets of roughly equal training mass. Input codes need
// not be sorted. Mapping code -> bucket is monotone.
std::vector<long long> bucketize(std::vector<long long> codes,
                                 std::size_t max_vocab);

// Frozen per-feature encoder. Built from the training split only; encoding
// other splits never mutates it. Id 0 is reserved for padding / unknown /
// bad values.
struct FeatureEncoder {
  FeatureConfig cfg;
  // categorical
  std::map<std::string, std::size_t> vocab;  // value -> id >= 1
  // numeric
  double min = 0, max = 0;
  bool bucketed = false;
  std::vector<long long> boundaries;            // bucket upper bounds
  std::map<long long, std::size_t> code_ids;    // dense ids when not bucketed
  std::size_t vocab_size = 1;                   // includes reserved id 0
  std::size_t embedding_dim = 1;

  std::size_t encode(const std::string& raw) const;
  // Inverse of numeric encoding to the code/bucket midpoint, in value space.
  double decode_numeric(std::size_t id) const;
};

struct FeatureSchema {
  int version = 1;
  std::vector<FeatureEncoder> features;

  std::vector<FeatureSpec> feature_specs() const;
  std::string to_json() const;
  static FeatureSchema from_json(const std::string& text);
  std::uint64_t hash() const;  // FNV-1a over the canonical serialization
};

struct RawRecord {
  std::string key;
  double time = 0;
  std::vector<std::string> raw;  // one cell per configured feature
  double label = 0;
  std::size_t file_order = 0;
};

struct GroupedDataset {
  // Keyed groups in chronological order; insertion order preserved on ties.
  std::map<std::string, std::vector<RawRecord>> groups;
  std::map<std::string, Split> assignment;
};

struct EncodedGroup {
  std::string key;
  std::vector<std::vector<std::size_t>> ids;  // [records][features]
  std::vector<real> labels;                   // one per record
};

struct DatasetManifest {
  int version = 1;
  FeatureSchema schema;
  std::map<Split, std::vector<EncodedGroup>> shards;

  std::uint64_t schema_hash() const { return schema.hash(); }
};

std::vector<RawRecord> read_csv(const DataConfig& cfg);

GroupedDataset group_and_order(std::vector<RawRecord> records,
                               std::size_t min_group_size = 2);

// Seeded shuffle of group keys, then partition; a group lands in exactly one
// split.
void split_groups(GroupedDataset& ds, const SplitSpec& spec,
                  std::uint64_t seed);

FeatureSchema build_schema(const GroupedDataset& ds, const DataConfig& cfg);

// Encodes every group with the frozen schema. Records with non-finite
// numeric values are dropped or zero-coded per policy.
DatasetManifest encode_dataset(const GroupedDataset& ds,
                               const FeatureSchema& schema,
                               const DataConfig& cfg);

// Fixed-length windowing: groups longer than L yield floor(len/L)
// non-overlapping tail-aligned windows (the oldest remainder is dropped);
// shorter groups pass through whole.
std::vector<EncodedWindow> window(const EncodedGroup& group, std::size_t L,
                                  PredictionMode mode);

void save_manifest(const DatasetManifest& m, const std::string& dir);
DatasetManifest load_manifest(const std::string& dir);

}  // namespace cf
