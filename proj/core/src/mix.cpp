#include "ttc/mix.hpp"

#include <algorithm>
#include <cmath>

#include "ttc/error.hpp"

namespace ttc {

MixResult mix_at_snr(const Waveform& foreground, const Waveform& background, double snr_db,
                     const ActivityOptions& activity) {
  MixResult out;
  out.foreground = foreground;
  out.background.sample_rate = foreground.sample_rate;
  out.background.samples.assign(foreground.size(), 0.0f);

  if (std::isinf(snr_db) && snr_db > 0) {
    out.mix = foreground;
    return out;
  }
  if (std::isnan(snr_db)) throw RangeError("mix_at_snr: SNR is NaN");
  if (foreground.sample_rate != background.sample_rate) {
    throw ConfigError("mix_at_snr: sample rates differ (" + std::to_string(foreground.sample_rate) +
                      " vs " + std::to_string(background.sample_rate) + ")");
  }
  if (foreground.empty()) throw DegenerateInputError("mix_at_snr: foreground is empty");
  if (background.empty()) throw DegenerateInputError("mix_at_snr: background is empty");

  const auto mask = active_mask(foreground, activity);
  const double fg_rms = masked_rms(foreground.samples, mask);
  if (fg_rms <= 0.0) throw DegenerateInputError("mix_at_snr: foreground is silent (RMS = 0)");

  std::vector<float> looped(foreground.size());
  for (std::size_t i = 0; i < looped.size(); ++i) looped[i] = background.samples[i % background.size()];
  const double bg_rms = masked_rms(looped, mask);
  if (bg_rms <= 0.0) throw DegenerateInputError("mix_at_snr: background is silent over the active region");

  const double gain = fg_rms / (bg_rms * db_to_linear(snr_db));
  out.background_gain = gain;
  out.mix.sample_rate = foreground.sample_rate;
  out.mix.samples.resize(foreground.size());
  for (std::size_t i = 0; i < looped.size(); ++i) {
    const double scaled = looped[i] * gain;
    out.background.samples[i] = static_cast<float>(scaled);
    out.mix.samples[i] = static_cast<float>(std::clamp(foreground.samples[i] + scaled, -1.0, 1.0));
  }
  return out;
}

double measure_snr_db(const Waveform& foreground, const Waveform& background,
                      const ActivityOptions& activity) {
  const auto mask = active_mask(foreground, activity);
  const double fg = masked_rms(foreground.samples, mask);
  const double bg = masked_rms(background.samples, mask);
  if (bg <= 0.0) return kNoNoise;
  return linear_to_db(fg / bg);
}

}  // namespace ttc
