#include "ttc/synthetic_corpus.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ttc/audio.hpp"
#include "ttc/error.hpp"

namespace ttc {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct EventSpec {
  const char* label;
  const char* category;
  double base_hz;
  double chirp;      // relative sweep over the clip
  double noise_mix;  // 0 = pure tone, 1 = pure noise
  double pulses;     // amplitude pulses per second (0 = none)
  double seconds;
};

constexpr EventSpec kEvents[] = {
    {"cat meowing", "animal", 600.0, -0.35, 0.05, 0.0, 0.7},
    {"dog barking", "animal", 350.0, 0.10, 0.35, 4.0, 0.8},
    {"bird chirping", "animal", 2800.0, 0.60, 0.02, 9.0, 0.6},
    {"car horn", "vehicle", 420.0, 0.0, 0.05, 0.0, 0.6},
    {"door knocking", "household", 180.0, 0.0, 0.60, 5.0, 0.7},
    {"phone ringing", "household", 1400.0, 0.0, 0.03, 12.0, 0.8},
};

Waveform envelope(Waveform w, double attack_s, double release_s) {
  const auto n = w.samples.size();
  const auto a = static_cast<std::size_t>(attack_s * w.sample_rate);
  const auto r = static_cast<std::size_t>(release_s * w.sample_rate);
  for (std::size_t i = 0; i < n; ++i) {
    double g = 1.0;
    if (i < a) g = static_cast<double>(i) / static_cast<double>(a);
    if (n - i < r) g = std::min(g, static_cast<double>(n - i) / static_cast<double>(r));
    w.samples[i] = static_cast<float>(w.samples[i] * g);
  }
  return w;
}

/// A "spoken digit": harmonic voice at a gender pitch plus two digit-specific
/// formant-like partials, with a digit-dependent duration.
Waveform digit_clip(int digit, bool female, int variant, int rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);
  const double f0 = (female ? 210.0 : 115.0) * (1.0 + jitter(rng)) * (1.0 + 0.02 * variant);
  const double f1 = 300.0 + 70.0 * digit;
  const double f2 = 1100.0 + 130.0 * ((digit * 7) % 10);
  const double seconds = 0.32 + 0.015 * digit;
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(static_cast<std::size_t>(seconds * rate));
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    double v = 0.0;
    for (int h = 1; h <= 4; ++h) v += std::sin(kTwoPi * f0 * h * t) / h;
    v = 0.5 * v + 0.35 * std::sin(kTwoPi * f1 * t) + 0.25 * std::sin(kTwoPi * f2 * t);
    w.samples[i] = static_cast<float>(0.3 * v);
  }
  return envelope(std::move(w), 0.02, 0.05);
}

Waveform event_clip(const EventSpec& e, int rate, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(static_cast<std::size_t>(e.seconds * rate));
  double phase = 0.0;
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    const double progress = t / e.seconds;
    const double hz = e.base_hz * (1.0 + e.chirp * progress);
    phase += kTwoPi * hz / rate;
    double v = (1.0 - e.noise_mix) * std::sin(phase) + e.noise_mix * 0.5 * noise(rng);
    if (e.pulses > 0) v *= 0.5 * (1.0 + std::sin(kTwoPi * e.pulses * t));
    w.samples[i] = static_cast<float>(0.5 * v);
  }
  return envelope(std::move(w), 0.01, 0.05);
}

Waveform noise_bed(bool babble, int rate, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(static_cast<std::size_t>(3.0 * rate));
  if (!babble) {
    double lp = 0.0;
    for (auto& s : w.samples) {
      lp = 0.85 * lp + 0.15 * noise(rng);
      s = static_cast<float>(0.4 * lp);
    }
    return w;
  }
  std::uniform_real_distribution<double> pitch(100.0, 260.0);
  std::uniform_real_distribution<double> rate_hz(2.0, 6.0);
  struct Voice { double f0, syll, phase; };
  std::vector<Voice> voices;
  for (int v = 0; v < 6; ++v) voices.push_back({pitch(rng), rate_hz(rng), 0.0});
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    double v = 0.05 * noise(rng);
    for (auto& voice : voices) {
      const double am = 0.5 * (1.0 + std::sin(kTwoPi * voice.syll * t + voice.f0));
      v += am * (std::sin(kTwoPi * voice.f0 * t) + 0.5 * std::sin(kTwoPi * 2.0 * voice.f0 * t)) / 6.0;
    }
    w.samples[i] = static_cast<float>(0.5 * v);
  }
  return w;
}

}  // namespace

std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir, std::uint64_t seed,
                                             const SyntheticCorpusOptions& options) {
  std::filesystem::create_directories(dir / "clips");
  std::mt19937_64 rng(seed);
  const auto manifest_path = dir / "manifest.csv";
  std::ofstream manifest(manifest_path, std::ios::trunc);
  if (!manifest) throw IoError("cannot write manifest '" + manifest_path.string() + "'");
  manifest << "id,path,kind,label,category,digit,gender\n";

  int counter = 0;
  auto store = [&](const std::string& id, Waveform w) {
    if (options.mixed_rates && (counter++ % 3 == 2)) w = resample(w, 22050);
    const auto rel = "clips/" + id + ".wav";
    write_wav(dir / rel, w);
    return rel;
  };

  for (int d = 0; d <= 9; ++d) {
    for (bool female : {false, true}) {
      for (int v = 0; v < options.clips_per_digit; ++v) {
        const std::string gender = female ? "female" : "male";
        const auto id = "digit-" + std::to_string(d) + "-" + gender + "-" + std::to_string(v);
        const auto rel = store(id, digit_clip(d, female, v, options.sample_rate, rng));
        manifest << id << ',' << rel << ",digit," << d << ",," << d << ',' << gender << '\n';
      }
    }
  }
  for (const auto& e : kEvents) {
    std::string id = "event-";
    for (const char* c = e.label; *c; ++c) id += *c == ' ' ? '-' : *c;
    const auto rel = store(id, event_clip(e, options.sample_rate, rng));
    manifest << id << ',' << rel << ",event," << e.label << ',' << e.category << ",,\n";
  }
  for (bool babble : {true, false}) {
    const std::string label = babble ? "babble" : "stationary";
    const auto rel = store("noise-" + label, noise_bed(babble, options.sample_rate, rng));
    manifest << "noise-" << label << ',' << rel << ",noise," << label << ",,,\n";
  }
  return manifest_path;
}

}  // namespace ttc
