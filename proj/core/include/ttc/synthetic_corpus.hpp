#pragma once

#include <cstdint>
#include <filesystem>

namespace ttc {

struct SyntheticCorpusOptions {
  int sample_rate = 16000;
  int clips_per_digit = 1;  // per (digit, gender)
  bool mixed_rates = true;  // store some clips at 22.05 kHz to exercise resampling
};

/// Writes a small labeled corpus of synthetic clips (tonal "digits" with a
/// gender-dependent pitch, textured sound events, two noise beds) plus a
/// `manifest.csv`. The clips carry no speech; they exist so the pipeline can
/// run end to end without the proprietary recordings. Returns the manifest path.
std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir, std::uint64_t seed,
                                             const SyntheticCorpusOptions& options = {});

}  // namespace ttc
