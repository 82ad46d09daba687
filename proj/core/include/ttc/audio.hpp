#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ttc {

/// Mono PCM waveform, samples nominally in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = 16000;

  bool empty() const noexcept { return samples.empty(); }
  std::size_t size() const noexcept { return samples.size(); }
  double duration_seconds() const noexcept {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

enum class WavEncoding { Pcm16, Float32 };

/// Decodes a RIFF/WAVE file (PCM 16-bit or IEEE float 32-bit). Multi-channel
/// input is averaged down to mono.
Waveform read_wav(const std::filesystem::path& path);
Waveform decode_wav(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");

void write_wav(const std::filesystem::path& path, const Waveform& wave,
               WavEncoding encoding = WavEncoding::Pcm16);
std::vector<std::uint8_t> encode_wav(const Waveform& wave,
                                     WavEncoding encoding = WavEncoding::Pcm16);

/// Linear-interpolation resampler. Returns the input unchanged when rates match.
Waveform resample(const Waveform& wave, int target_rate);

double rms(std::span<const float> samples) noexcept;
float peak(std::span<const float> samples) noexcept;

/// Scales so the absolute peak equals `headroom_dbfs` (e.g. -3 dBFS).
/// Silent input is returned unchanged.
void peak_normalize(Waveform& wave, double headroom_dbfs);

inline double db_to_linear(double db) noexcept { return std::pow(10.0, db / 20.0); }
inline double linear_to_db(double linear) noexcept { return 20.0 * std::log10(linear); }

/// Activity detection used for SNR measurement: a sample is active when the
/// RMS of its enclosing frame exceeds `threshold_dbfs`.
struct ActivityOptions {
  double threshold_dbfs = -40.0;
  double frame_ms = 20.0;
};

std::vector<bool> active_mask(const Waveform& wave, const ActivityOptions& opts = {});

/// RMS restricted to the samples where `mask` is set. `mask` must be at least
/// as long as `samples`' active range; missing mask entries count as inactive.
double masked_rms(std::span<const float> samples, const std::vector<bool>& mask) noexcept;

}  // namespace ttc
