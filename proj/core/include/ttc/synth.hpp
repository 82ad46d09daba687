#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ttc/corpus.hpp"
#include "ttc/mix.hpp"
#include "ttc/trial.hpp"

namespace ttc {

struct QuestionTemplate {
  QuestionKind kind = QuestionKind::EventPresence;
  std::optional<TargetGender> target_gender;  // unset: drawn per trial
  int option_count = 2;
};

/// Option counts follow the shapes of the example prompts: two for yes/no
/// and last-two-digit questions, four otherwise.
QuestionTemplate default_template(QuestionKind kind);

/// Templates the generator rotates through for a task.
std::vector<QuestionTemplate> default_templates(TaskKind task);

/// Throws ConfigError for kind/task mismatches or option_count < 2.
void validate_template(const QuestionTemplate& tmpl, TaskKind task);

struct SynthParams {
  int sequence_length = 6;
  double snr_db = 10.0;  // kNoNoise disables the noise bed
  double gap_ms = 300.0;
  int min_events = 2;
  int max_events = 4;
  double event_gap_ms = 300.0;
  double lead_ms = 200.0;  // silence before the first onset
  int max_retries = 16;
  ActivityOptions activity{};
};

/// What generate_question needs to know about the rendered scene.
struct SceneFacts {
  TaskKind task = TaskKind::Task1Event;
  std::vector<int> male_digits;
  std::vector<int> female_digits;
  std::vector<std::string> events_played;
  std::string queried_event;
  std::optional<std::string> queried_category;
  bool event_present = false;
};

struct GeneratedQuestion {
  std::string pre_instruction;
  std::string question;
  std::vector<std::string> options;
  std::size_t ground_truth = 0;
  TargetGender target = TargetGender::Male;
};

/// Instantiates a question for `facts`. Distractors are drawn without
/// replacement and option order is shuffled (yes/no keeps its fixed order).
/// Throws GenerationError when the template cannot be satisfied.
GeneratedQuestion generate_question(const QuestionTemplate& tmpl, const SceneFacts& facts,
                                    std::mt19937_64& rng);

struct SynthesisResult {
  Trial trial;
  MixPlan plan;
  Waveform foreground;  // speech or event layer before the noise bed
  Waveform background;  // scaled noise bed (silent when noise-free)
};

/// Deterministic for a given (corpus, task, template, params, seed).
SynthesisResult synthesize_trial(const Corpus& corpus, TaskKind task, const QuestionTemplate& tmpl,
                                 const SynthParams& params, std::uint64_t seed,
                                 std::string id = {});

struct TrialSetSpec {
  std::vector<TaskKind> tasks{TaskKind::Task1Event, TaskKind::Task2Speech, TaskKind::Task3Overlap};
  int per_task = 10;
  std::uint64_t seed = 0;
  SynthParams params{};
};

/// Writes `<out>/trials/<id>.json` and `<out>/audio/<id>.wav` for every
/// generated trial; returns the trial document paths.
std::vector<std::filesystem::path> write_trial_set(const Corpus& corpus, const TrialSetSpec& spec,
                                                   const std::filesystem::path& out_dir);

/// Seed for the i-th trial of a task within a set.
std::uint64_t trial_seed(std::uint64_t set_seed, TaskKind task, int index) noexcept;

}  // namespace ttc
