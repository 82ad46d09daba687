#include <gtest/gtest.h>

#include "test_support.hpp"
#include "ttc/error.hpp"
#include "ttc/trial.hpp"

namespace ttc {
namespace {

TEST(TaskKinds, NamesAndNumbersRoundTrip) {
  for (auto k : {TaskKind::Task1Event, TaskKind::Task2Speech, TaskKind::Task3Overlap}) {
    EXPECT_EQ(parse_task_kind(to_string(k)), k);
    EXPECT_EQ(task_from_number(task_number(k)), k);
  }
  EXPECT_THROW(task_from_number(4), ConfigError);
  EXPECT_THROW(parse_task_kind("task9"), ConfigError);
  for (auto q : {QuestionKind::EventPresence, QuestionKind::LastDigit, QuestionKind::LastTwoDigits,
                 QuestionKind::SumLastTwo, QuestionKind::NotMentioned, QuestionKind::OrderLastThree}) {
    EXPECT_EQ(parse_question_kind(to_string(q)), q);
  }
}

TEST(Trial, ValidationCatchesBrokenInvariants) {
  auto t = test::make_trial(TaskKind::Task1Event, {"Yes", "No"}, 0);
  EXPECT_NO_THROW(validate_trial(t));

  auto dup = t;
  dup.options = {"Yes", "Yes"};
  EXPECT_THROW(validate_trial(dup), ConfigError);

  auto oob = t;
  oob.ground_truth = 2;
  EXPECT_THROW(validate_trial(oob), ConfigError);

  auto one = t;
  one.options = {"Yes"};
  one.ground_truth = 0;
  EXPECT_THROW(validate_trial(one), ConfigError);

  auto task3 = test::make_trial(TaskKind::Task3Overlap, {"1", "2"}, 0);
  task3.metadata.male_digits = {1, 2};
  EXPECT_THROW(validate_trial(task3), ConfigError);
  task3.metadata.female_digits = {3, 4};
  EXPECT_NO_THROW(validate_trial(task3));
}

TEST(Trial, SaveLoadRoundTrip) {
  test::TempDir dir;
  auto t = test::make_trial(TaskKind::Task2Speech, {"6,2", "2,2"}, 1, "speech-1");
  t.metadata.question_kind = QuestionKind::LastTwoDigits;
  t.metadata.male_digits = {1, 6, 2};
  t.metadata.target_gender = TargetGender::Male;
  t.metadata.snr_db = 5.0;
  t.metadata.digit_onsets = {10, 20, 30};
  t.metadata.seed = 99;
  std::filesystem::create_directories(dir / "audio");
  write_wav(dir / "audio" / "speech-1.wav", t.audio);
  t.audio_path = "audio/speech-1.wav";
  save_trial(t, dir / "speech-1.json");

  const auto back = load_trial(dir / "speech-1.json");
  EXPECT_EQ(back.id, t.id);
  EXPECT_EQ(back.options, t.options);
  EXPECT_EQ(back.ground_truth, 1u);
  EXPECT_EQ(back.metadata.male_digits, t.metadata.male_digits);
  EXPECT_EQ(back.metadata.digit_onsets, t.metadata.digit_onsets);
  EXPECT_EQ(back.metadata.snr_db, 5.0);
  EXPECT_EQ(back.metadata.target_gender, TargetGender::Male);
  EXPECT_EQ(back.metadata.seed, 99u);
  EXPECT_EQ(back.audio.size(), t.audio.size());
  EXPECT_EQ(back.correct_option(), "2,2");

  const auto set = load_trial_set(dir.path());
  ASSERT_EQ(set.size(), 1u);
  EXPECT_THROW(load_trial_set(dir / "nope"), IoError);
}

TEST(Trial, RejectsMalformedDocuments) {
  test::TempDir dir;
  test::write_file(dir / "bad.json", "{\"id\": 3}");
  EXPECT_THROW(load_trial(dir / "bad.json", false), ConfigError);
}

}  // namespace
}  // namespace ttc
