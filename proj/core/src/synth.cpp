#include "chunkformer/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "chunkformer/errors.hpp"

namespace cf {

void SynthConfig::validate() const {
  if (groups == 0) throw ConfigError("synth: groups must be >= 1");
  if (period == 0) throw ConfigError("synth: period must be >= 1");
  if (min_len < burst_window || min_len % period != 0 || max_len % period != 0 ||
      min_len > max_len)
    throw ConfigError(
        "synth: lengths must be multiples of period, min_len >= burst_window");
  if (burst_len > burst_window)
    throw ConfigError("synth: burst_len must fit in burst_window");
  if (noise < 0) throw ConfigError("synth: noise must be >= 0");
}

void generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::ofstream out(cfg.out_path);
  if (!out) throw IngestionError("cannot write " + cfg.out_path);
  out << "entity,t,event,value,label\n";

  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<std::size_t> len_steps(
      cfg.min_len / cfg.period, cfg.max_len / cfg.period);
  std::uniform_int_distribution<int> token(0, 9);
  std::uniform_int_distribution<std::size_t> burst_off(
      0, cfg.burst_window - cfg.burst_len);
  std::normal_distribution<double> jitter(0.0, cfg.noise);

  char key[16];
  for (std::size_t g = 0; g < cfg.groups; ++g) {
    const std::size_t len = len_steps(rng) * cfg.period;
    const bool phase_pos = coin(rng);
    const bool burst = coin(rng);
    const double phase = phase_pos ? 0.0 : std::numbers::pi;
    const std::size_t burst_start =
        len - cfg.burst_window + burst_off(rng);  // used only when burst
    const int label = (burst && phase_pos) ? 1 : 0;

    std::snprintf(key, sizeof key, "g%06zu", g);
    for (std::size_t t = 0; t < len; ++t) {
      const bool in_burst =
          burst && t >= burst_start && t < burst_start + cfg.burst_len;
      const double value =
          std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                       static_cast<double>(cfg.period) +
                   phase) +
          jitter(rng);
      out << key << ',' << t << ',';
      if (in_burst)
        out << "burst";
      else
        out << 'e' << token(rng);
      out << ',' << value << ',' << label << '\n';
    }
  }
}

}  // namespace cf
