#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ttc/audio.hpp"

namespace ttc {

/// Requested SNR meaning "no background at all".
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

struct MixLayer {
  std::string clip_id;
  std::int64_t onset = 0;  // samples
  double gain = 1.0;       // linear
};

struct MixPlan {
  std::vector<MixLayer> layers;
  std::optional<double> target_snr_db;
  std::int64_t duration = 0;  // samples
};

struct MixResult {
  Waveform mix;         // hard-limited sum
  Waveform foreground;  // as passed in
  Waveform background;  // looped and scaled, same length as foreground
  double background_gain = 0.0;
};

/// Scales `background` so that the foreground-to-background RMS ratio over
/// the foreground's active region equals `snr_db`, then sums and hard-limits
/// to [-1, 1]. A background shorter than the foreground is looped.
/// `snr_db == kNoNoise` returns the foreground untouched.
MixResult mix_at_snr(const Waveform& foreground, const Waveform& background, double snr_db,
                     const ActivityOptions& activity = {});

/// SNR of two already-scaled layers over the foreground's active region.
double measure_snr_db(const Waveform& foreground, const Waveform& background,
                      const ActivityOptions& activity = {});

}  // namespace ttc
