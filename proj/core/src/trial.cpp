#include "ttc/trial.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "ttc/error.hpp"

namespace ttc {

using nlohmann::json;

std::string_view to_string(TaskKind kind) noexcept {
  switch (kind) {
    case TaskKind::Task1Event: return "task1_event";
    case TaskKind::Task2Speech: return "task2_speech";
    case TaskKind::Task3Overlap: return "task3_overlap";
  }
  return "?";
}

std::string_view to_string(Gender g) noexcept { return g == Gender::Male ? "male" : "female"; }

std::string_view to_string(TargetGender g) noexcept {
  switch (g) {
    case TargetGender::Male: return "male";
    case TargetGender::Female: return "female";
    case TargetGender::Both: return "both";
  }
  return "?";
}

std::string_view to_string(QuestionKind kind) noexcept {
  switch (kind) {
    case QuestionKind::EventPresence: return "event_presence";
    case QuestionKind::LastDigit: return "last_digit";
    case QuestionKind::LastTwoDigits: return "last_two_digits";
    case QuestionKind::SumLastTwo: return "sum_last_two";
    case QuestionKind::NotMentioned: return "not_mentioned";
    case QuestionKind::OrderLastThree: return "order_last_three";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view text) {
  for (auto k : {TaskKind::Task1Event, TaskKind::Task2Speech, TaskKind::Task3Overlap}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown task kind '" + std::string(text) + "'");
}

Gender parse_gender(std::string_view text) {
  if (text == "male") return Gender::Male;
  if (text == "female") return Gender::Female;
  throw ConfigError("unknown gender '" + std::string(text) + "'");
}

TargetGender parse_target_gender(std::string_view text) {
  if (text == "both") return TargetGender::Both;
  return parse_gender(text) == Gender::Male ? TargetGender::Male : TargetGender::Female;
}

QuestionKind parse_question_kind(std::string_view text) {
  for (auto k : {QuestionKind::EventPresence, QuestionKind::LastDigit, QuestionKind::LastTwoDigits,
                 QuestionKind::SumLastTwo, QuestionKind::NotMentioned, QuestionKind::OrderLastThree}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown question kind '" + std::string(text) + "'");
}

int task_number(TaskKind kind) noexcept {
  switch (kind) {
    case TaskKind::Task1Event: return 1;
    case TaskKind::Task2Speech: return 2;
    case TaskKind::Task3Overlap: return 3;
  }
  return 0;
}

TaskKind task_from_number(int n) {
  switch (n) {
    case 1: return TaskKind::Task1Event;
    case 2: return TaskKind::Task2Speech;
    case 3: return TaskKind::Task3Overlap;
    default: throw ConfigError("task number must be 1, 2 or 3 (got " + std::to_string(n) + ")");
  }
}

void validate_trial(const Trial& trial) {
  auto fail = [&](const std::string& why) {
    throw ConfigError("trial '" + trial.id + "': " + why);
  };
  if (trial.id.empty()) fail("empty id");
  if (trial.options.size() < 2) fail("needs at least two options");
  if (trial.ground_truth >= trial.options.size()) fail("ground truth index out of range");
  std::set<std::string> seen(trial.options.begin(), trial.options.end());
  if (seen.size() != trial.options.size()) fail("option texts are not pairwise distinct");
  if (trial.audio.empty()) fail("audio is empty");
  const auto& md = trial.metadata;
  if (trial.task == TaskKind::Task2Speech && md.male_digits.empty() && md.female_digits.empty()) {
    fail("task 2 metadata carries no digit sequence");
  }
  if (trial.task == TaskKind::Task3Overlap && (md.male_digits.empty() || md.female_digits.empty())) {
    fail("task 3 metadata needs both digit sequences");
  }
}

namespace {

json metadata_to_json(const TrialMetadata& md) {
  json j;
  j["question_kind"] = to_string(md.question_kind);
  j["target_gender"] = md.target_gender ? json(to_string(*md.target_gender)) : json(nullptr);
  j["snr_db"] = md.snr_db ? json(*md.snr_db) : json(nullptr);
  j["digit_sequences"] = {{"male", md.male_digits}, {"female", md.female_digits}};
  j["event_labels"] = md.event_labels;
  j["queried_event"] = md.queried_event ? json(*md.queried_event) : json(nullptr);
  j["digit_onsets"] = md.digit_onsets;
  j["gap_ms"] = md.gap_ms;
  j["seed"] = md.seed;
  return j;
}

TrialMetadata metadata_from_json(const json& j) {
  TrialMetadata md;
  md.question_kind = parse_question_kind(j.at("question_kind").get<std::string>());
  if (j.contains("target_gender") && !j["target_gender"].is_null()) {
    md.target_gender = parse_target_gender(j["target_gender"].get<std::string>());
  }
  if (j.contains("snr_db") && !j["snr_db"].is_null()) md.snr_db = j["snr_db"].get<double>();
  if (j.contains("digit_sequences")) {
    const auto& seq = j["digit_sequences"];
    md.male_digits = seq.value("male", std::vector<int>{});
    md.female_digits = seq.value("female", std::vector<int>{});
  }
  md.event_labels = j.value("event_labels", std::vector<std::string>{});
  if (j.contains("queried_event") && !j["queried_event"].is_null()) {
    md.queried_event = j["queried_event"].get<std::string>();
  }
  md.digit_onsets = j.value("digit_onsets", std::vector<std::int64_t>{});
  md.gap_ms = j.value("gap_ms", 0.0);
  md.seed = j.value("seed", std::uint64_t{0});
  return md;
}

}  // namespace

json trial_to_json(const Trial& trial) {
  return json{
      {"id", trial.id},
      {"task_kind", to_string(trial.task)},
      {"audio_path", trial.audio_path},
      {"pre_instruction", trial.pre_instruction},
      {"question", trial.question},
      {"options", trial.options},
      {"ground_truth_index", trial.ground_truth},
      {"metadata", metadata_to_json(trial.metadata)},
  };
}

Trial trial_from_json(const json& doc, const std::filesystem::path& base_dir, bool load_audio) {
  Trial t;
  try {
    t.id = doc.at("id").get<std::string>();
    t.task = parse_task_kind(doc.at("task_kind").get<std::string>());
    t.audio_path = doc.at("audio_path").get<std::string>();
    t.pre_instruction = doc.at("pre_instruction").get<std::string>();
    t.question = doc.at("question").get<std::string>();
    t.options = doc.at("options").get<std::vector<std::string>>();
    t.ground_truth = doc.at("ground_truth_index").get<std::size_t>();
    t.metadata = metadata_from_json(doc.at("metadata"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("trial document: ") + e.what());
  }
  if (load_audio) {
    std::filesystem::path audio = t.audio_path;
    if (audio.is_relative()) audio = base_dir / audio;
    t.audio = read_wav(audio);
    validate_trial(t);
  }
  return t;
}

void save_trial(const Trial& trial, const std::filesystem::path& json_path) {
  std::ofstream out(json_path, std::ios::trunc);
  if (!out) throw IoError("cannot write trial '" + json_path.string() + "'");
  out << trial_to_json(trial).dump(2) << '\n';
}

Trial load_trial(const std::filesystem::path& json_path, bool load_audio) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open trial '" + json_path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("trial '" + json_path.string() + "': " + e.what());
  }
  return trial_from_json(doc, json_path.parent_path(), load_audio);
}

std::vector<Trial> load_trial_set(const std::filesystem::path& dir, bool load_audio) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("trial set directory '" + dir.string() + "' does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Trial> trials;
  trials.reserve(files.size());
  for (const auto& f : files) trials.push_back(load_trial(f, load_audio));
  return trials;
}

}  // namespace ttc
