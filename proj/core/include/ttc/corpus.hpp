#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ttc/audio.hpp"
#include "ttc/trial.hpp"

namespace ttc {

enum class ClipKind { Event, Digit, Noise };

std::string_view to_string(ClipKind kind) noexcept;
ClipKind parse_clip_kind(std::string_view text);

struct Clip {
  std::string id;
  ClipKind kind = ClipKind::Event;
  Waveform wave;
  std::string label;                    // event or noise label ("cat meowing", "babble")
  std::optional<std::string> category;  // event category ("ANIMAL")
  int digit = -1;
  std::optional<Gender> gender;
  std::filesystem::path source;
};

struct Corpus {
  int sample_rate = 16000;
  std::vector<Clip> clips;

  std::vector<const Clip*> of_kind(ClipKind kind) const;
  std::vector<const Clip*> digit_clips(int digit, Gender gender) const;
  /// Distinct event labels in first-seen order.
  std::vector<std::string> event_labels() const;
  const Clip* find_event(const std::string& label) const;
};

struct CorpusOptions {
  int session_rate = 16000;
  double headroom_dbfs = -3.0;
  /// Tasks the corpus must support; coverage is checked for each.
  std::vector<TaskKind> required_tasks;
};

/// Reads a CSV or JSON manifest. CSV needs a header row naming at least
/// `path` and `kind`; the optional columns are `id`, `label`, `category`,
/// `digit` and `gender`. JSON is either an array of clip objects with the
/// same keys or an object holding such an array under "clips". Relative
/// paths resolve against the manifest's directory.
Corpus load_corpus(const std::filesystem::path& manifest_path, const CorpusOptions& options = {});

/// Throws CoverageError listing what is missing for the given tasks.
void check_coverage(const Corpus& corpus, std::span<const TaskKind> tasks);

}  // namespace ttc
