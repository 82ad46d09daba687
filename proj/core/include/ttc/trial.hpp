#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttc/audio.hpp"

namespace ttc {

enum class TaskKind { Task1Event, Task2Speech, Task3Overlap };

enum class Gender { Male, Female };

/// Which speaker(s) a question targets.
enum class TargetGender { Male, Female, Both };

enum class QuestionKind {
  EventPresence,
  LastDigit,
  LastTwoDigits,
  SumLastTwo,
  NotMentioned,
  OrderLastThree,
};

std::string_view to_string(TaskKind kind) noexcept;
std::string_view to_string(Gender g) noexcept;
std::string_view to_string(TargetGender g) noexcept;
std::string_view to_string(QuestionKind kind) noexcept;

TaskKind parse_task_kind(std::string_view text);
Gender parse_gender(std::string_view text);
TargetGender parse_target_gender(std::string_view text);
QuestionKind parse_question_kind(std::string_view text);

/// 1-based task number as used on the command line (1, 2, 3).
int task_number(TaskKind kind) noexcept;
TaskKind task_from_number(int n);

/// Generation parameters kept with a trial so the answer can be recomputed.
struct TrialMetadata {
  QuestionKind question_kind = QuestionKind::EventPresence;
  std::optional<TargetGender> target_gender;
  std::optional<double> snr_db;  // absent for noise-free trials
  std::vector<int> male_digits;
  std::vector<int> female_digits;
  std::vector<std::string> event_labels;  // in playback order
  std::optional<std::string> queried_event;
  std::vector<std::int64_t> digit_onsets;  // samples, one per digit index
  double gap_ms = 0.0;
  std::uint64_t seed = 0;

  const std::vector<int>& digits(Gender g) const noexcept {
    return g == Gender::Male ? male_digits : female_digits;
  }
};

struct Trial {
  std::string id;
  TaskKind task = TaskKind::Task1Event;
  Waveform audio;
  std::string audio_path;  // relative to the trial document when serialized
  std::string pre_instruction;
  std::string question;
  std::vector<std::string> options;
  std::size_t ground_truth = 0;
  TrialMetadata metadata;

  const std::string& correct_option() const { return options.at(ground_truth); }
};

/// Throws ConfigError describing the first violated invariant.
void validate_trial(const Trial& trial);

nlohmann::json trial_to_json(const Trial& trial);
/// `base_dir` resolves a relative audio_path; audio is decoded when `load_audio`.
Trial trial_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                      bool load_audio = true);

void save_trial(const Trial& trial, const std::filesystem::path& json_path);
Trial load_trial(const std::filesystem::path& json_path, bool load_audio = true);

/// Loads every `*.json` trial document in `dir`, sorted by file name.
std::vector<Trial> load_trial_set(const std::filesystem::path& dir, bool load_audio = true);

}  // namespace ttc
