#include "chunkformer/bench.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>

#include "chunkformer/errors.hpp"
#include "json.hpp"

namespace cf {

using nlohmann::json;

void BenchCase::validate() const {
  if (L == 0) throw ConfigError("bench case: L must be >= 1");
  if (repetitions < 3) throw ConfigError("bench case: repetitions must be >= 3");
  if (batch == 0) throw ConfigError("bench case: batch must be >= 1");
}

namespace {

ChunkFormerConfig case_config(const BenchCase& c) {
  ChunkFormerConfig cfg;
  cfg.stage_chunk_sizes = c.full_attention()
                              ? std::vector<std::size_t>{c.L}
                              : c.stage_chunk_sizes;
  cfg.L = c.L;
  cfg.d_model = c.d_model;
  cfg.heads = c.heads;
  cfg.dropout = real{0};
  cfg.positional = PositionalMode::kSinusoidal;
  cfg.prediction_mode = PredictionMode::kLastPosition;
  return cfg;
}

EncodedWindow case_window(const BenchCase& c, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> id(1, 15);
  EncodedWindow w;
  w.ids.resize(c.L);
  for (auto& row : w.ids) row = {id(rng)};
  w.labels = {real{0}};
  return w;
}

}  // namespace

FootprintMeasurement measure_footprint(const BenchCase& c) {
  c.validate();
  const ChunkFormerConfig cfg = case_config(c);
  ChunkFormerModel model(cfg, {{"f", 16, 4}}, /*seed=*/17);
  std::mt19937_64 rng(c.L * 31 + 5);
  const EncodedWindow w = case_window(c, rng);

  FootprintMeter meter;
  model.forward(w, /*training=*/false, nullptr, &meter);

  FootprintMeasurement m;
  const long long heads = static_cast<long long>(c.heads);
  for (long long stage_total : meter.stage_totals())
    m.measured_per_stage.push_back(stage_total / heads);
  m.measured_peak = meter.peak() / heads;

  const FootprintReport pred = attention_footprint(cfg);
  m.predicted_per_stage = pred.per_stage;
  m.predicted_peak = pred.peak;
  m.full_reference = pred.full_attention;
  return m;
}

TimingMeasurement measure_time(const BenchCase& c) {
  c.validate();
  const ChunkFormerConfig cfg = case_config(c);
  ChunkFormerModel model(cfg, {{"f", 16, 4}}, /*seed=*/17);
  std::mt19937_64 rng(c.L * 31 + 5);
  std::vector<EncodedWindow> batch;
  for (std::size_t b = 0; b < c.batch; ++b)
    batch.push_back(case_window(c, rng));

  auto run_once = [&] {
    for (const auto& w : batch) {
      if (c.include_backward) {
        Tensor loss = bce_with_logits(model.forward(w, true), w.labels);
        backward(loss);
        for (Tensor& p : model.parameters()) p.zero_grad();
      } else {
        model.forward(w, false);
      }
    }
  };

  run_once();  // warm-up
  std::vector<double> times;
  for (std::size_t r = 0; r < c.repetitions; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    run_once();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(
        std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  TimingMeasurement t;
  t.median_ms = times[times.size() / 2];
  t.min_ms = times.front();
  t.max_ms = times.back();
  return t;
}

std::vector<BenchRow> sweep(const std::vector<std::size_t>& lengths,
                            const std::vector<std::vector<std::size_t>>& variants,
                            std::size_t d_model, std::size_t heads,
                            std::size_t repetitions, bool include_backward) {
  std::vector<BenchRow> rows;
  for (std::size_t L : lengths) {
    for (const auto& variant : variants) {
      BenchCase c;
      c.L = L;
      c.d_model = d_model;
      c.heads = heads;
      c.stage_chunk_sizes = variant;
      c.repetitions = repetitions;
      c.include_backward = include_backward;
      BenchRow row;
      row.c = c;
      row.footprint = measure_footprint(c);
      row.timing = measure_time(c);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

std::string variant_name(const BenchCase& c) {
  if (c.full_attention()) return "full";
  std::ostringstream os;
  os << "chunked(";
  for (std::size_t i = 0; i < c.stage_chunk_sizes.size(); ++i) {
    if (i) os << ",";
    os << c.stage_chunk_sizes[i];
  }
  os << ")";
  return os.str();
}

std::string sparkline(const std::vector<double>& vals) {
  static const char* bars[] = {" ", ".", ":", "-", "=", "+", "*", "#"};
  const double mx = *std::max_element(vals.begin(), vals.end());
  std::string s;
  for (double v : vals) {
    const int level = mx > 0 ? static_cast<int>(v / mx * 7.0) : 0;
    s += bars[std::clamp(level, 0, 7)];
  }
  return s;
}

}  // namespace

std::string render_table(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "L\tvariant\tpeak_elems_per_head\tfull_ref\tratio_full_over_peak\t"
        "median_ms\tmin_ms\tmax_ms\n";
  std::vector<double> ratios;
  for (const auto& r : rows) {
    const double ratio = static_cast<double>(r.footprint.full_reference) /
                         static_cast<double>(r.footprint.measured_peak);
    ratios.push_back(ratio);
    os << r.c.L << "\t" << variant_name(r.c) << "\t"
       << r.footprint.measured_peak << "\t" << r.footprint.full_reference
       << "\t" << ratio << "\t" << r.timing.median_ms << "\t"
       << r.timing.min_ms << "\t" << r.timing.max_ms << "\n";
  }
  os << "# ratio sparkline: " << sparkline(ratios) << "\n";
  return os.str();
}

std::string render_json(const std::vector<BenchRow>& rows) {
  json j = json::array();
  for (const auto& r : rows) {
    json jr;
    jr["L"] = r.c.L;
    jr["variant"] = variant_name(r.c);
    jr["stages"] = r.c.stage_chunk_sizes;
    jr["measured_per_stage"] = r.footprint.measured_per_stage;
    jr["measured_peak"] = r.footprint.measured_peak;
    jr["predicted_per_stage"] = r.footprint.predicted_per_stage;
    jr["predicted_peak"] = r.footprint.predicted_peak;
    jr["full_reference"] = r.footprint.full_reference;
    jr["median_ms"] = r.timing.median_ms;
    jr["min_ms"] = r.timing.min_ms;
    jr["max_ms"] = r.timing.max_ms;
    j.push_back(std::move(jr));
  }
  return j.dump(2);
}

}  // namespace cf
