#include <gtest/gtest.h>

#include <map>

#include "oracles.hpp"
#include "test_support.hpp"
#include "ttc/error.hpp"
#include "ttc/synth.hpp"

namespace ttc {
namespace {

std::optional<Gender> gender_of(const std::string& clip_id) {
  for (const auto& c : test::shared_corpus().clips) {
    if (c.id == clip_id) return c.gender;
  }
  return std::nullopt;
}

TEST(Synth, IsDeterministicForSeed) {
  const auto& corpus = test::shared_corpus();
  const auto tmpl = default_template(QuestionKind::SumLastTwo);
  const auto a = synthesize_trial(corpus, TaskKind::Task3Overlap, tmpl, {}, 42);
  const auto b = synthesize_trial(corpus, TaskKind::Task3Overlap, tmpl, {}, 42);
  const auto c = synthesize_trial(corpus, TaskKind::Task3Overlap, tmpl, {}, 43);
  EXPECT_EQ(a.trial.audio.samples, b.trial.audio.samples);
  EXPECT_EQ(a.trial.options, b.trial.options);
  EXPECT_EQ(a.trial.id, b.trial.id);
  EXPECT_NE(a.trial.audio.samples, c.trial.audio.samples);
}

TEST(Synth, Task3OnsetsAreSharedAcrossGenders) {
  const auto& corpus = test::shared_corpus();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = synthesize_trial(corpus, TaskKind::Task3Overlap, default_template(QuestionKind::NotMentioned), {},
                                    seed);
    std::map<std::int64_t, std::vector<Gender>> by_onset;
    for (const auto& layer : r.plan.layers) {
      if (auto g = gender_of(layer.clip_id)) by_onset[layer.onset].push_back(*g);
    }
    ASSERT_EQ(by_onset.size(), 6u);
    for (const auto& [onset, genders] : by_onset) {
      ASSERT_EQ(genders.size(), 2u) << "onset " << onset;
      EXPECT_NE(genders[0], genders[1]);
    }
    std::vector<std::int64_t> onsets;
    for (const auto& [onset, _] : by_onset) onsets.push_back(onset);
    EXPECT_EQ(onsets, r.trial.metadata.digit_onsets);
  }
}

TEST(Synth, NoisyTrialsHitRequestedSnr) {
  const auto& corpus = test::shared_corpus();
  for (double snr : {-5.0, 0.0, 5.0, 10.0}) {
    SynthParams p;
    p.snr_db = snr;
    const auto r = synthesize_trial(corpus, TaskKind::Task2Speech, default_template(QuestionKind::LastDigit), p, 9);
    EXPECT_NEAR(oracle::reference_snr_db(r.foreground.samples, r.background.samples, 16000), snr, 0.1);
    EXPECT_EQ(r.trial.metadata.snr_db, snr);
  }
}

TEST(Synth, NoiseFreeTrialHasNoBed) {
  SynthParams p;
  p.snr_db = kNoNoise;
  const auto r = synthesize_trial(test::shared_corpus(), TaskKind::Task2Speech,
                                  default_template(QuestionKind::LastDigit), p, 9);
  EXPECT_EQ(r.trial.audio.samples, r.foreground.samples);
  EXPECT_FALSE(r.trial.metadata.snr_db.has_value());
}

TEST(Synth, GroundTruthRecomputesFromMetadata) {
  const auto& corpus = test::shared_corpus();
  int checked = 0;
  for (auto task : {TaskKind::Task1Event, TaskKind::Task2Speech, TaskKind::Task3Overlap}) {
    const auto templates = default_templates(task);
    for (int i = 0; i < 60; ++i) {
      const auto r = synthesize_trial(corpus, task, templates[i % templates.size()], {}, trial_seed(5, task, i));
      const auto problem = oracle::check_ground_truth(r.trial);
      EXPECT_FALSE(problem.has_value()) << *problem;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 180);
}

TEST(Synth, BothSpeakersLastDigit) {
  QuestionTemplate t{QuestionKind::LastDigit, TargetGender::Both, 4};
  const auto r = synthesize_trial(test::shared_corpus(), TaskKind::Task3Overlap, t, {}, 3);
  EXPECT_EQ(r.trial.pre_instruction, "Focus on both speakers.");
  EXPECT_FALSE(oracle::check_ground_truth(r.trial).has_value());
}

TEST(Synth, QuestionWording) {
  const auto r = synthesize_trial(test::shared_corpus(), TaskKind::Task3Overlap,
                                  {QuestionKind::OrderLastThree, TargetGender::Female, 4}, {}, 1);
  EXPECT_EQ(r.trial.pre_instruction, "Focus on digits order spoken by FEMALE.");
  EXPECT_EQ(r.trial.question, "What is the order of last three digits spoken by female?");
  EXPECT_EQ(r.trial.options.size(), 4u);

  const auto s = synthesize_trial(test::shared_corpus(), TaskKind::Task2Speech,
                                  {QuestionKind::LastTwoDigits, TargetGender::Male, 2}, {}, 1);
  EXPECT_EQ(s.trial.pre_instruction, "Listen carefully.");
  EXPECT_EQ(s.trial.question, "What is the LAST TWO digits spoken by male?");

  const auto e = synthesize_trial(test::shared_corpus(), TaskKind::Task1Event,
                                  default_template(QuestionKind::EventPresence), {}, 1);
  EXPECT_EQ(e.trial.options, (std::vector<std::string>{"Yes", "No"}));
  EXPECT_TRUE(e.trial.question.starts_with("Did you hear the "));
  EXPECT_TRUE(e.trial.metadata.digit_onsets.empty());
}

TEST(Synth, TemplateValidation) {
  EXPECT_THROW(validate_template(default_template(QuestionKind::SumLastTwo), TaskKind::Task2Speech), ConfigError);
  EXPECT_THROW(validate_template(default_template(QuestionKind::LastDigit), TaskKind::Task1Event), ConfigError);
  EXPECT_THROW(validate_template({QuestionKind::LastDigit, std::nullopt, 1}, TaskKind::Task2Speech), ConfigError);
  EXPECT_THROW(validate_template({QuestionKind::LastTwoDigits, TargetGender::Both, 2}, TaskKind::Task3Overlap),
               ConfigError);
  SynthParams p;
  p.sequence_length = 2;
  EXPECT_THROW(synthesize_trial(test::shared_corpus(), TaskKind::Task3Overlap,
                                default_template(QuestionKind::OrderLastThree), p, 1),
               ConfigError);
}

TEST(Synth, GenerateQuestionFailsWhenUnsatisfiable) {
  std::mt19937_64 rng(1);
  SceneFacts facts;
  facts.task = TaskKind::Task3Overlap;
  facts.male_digits = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  facts.female_digits = {1, 1, 1};
  EXPECT_THROW(generate_question({QuestionKind::NotMentioned, TargetGender::Male, 4}, facts, rng), GenerationError);
}

TEST(Synth, TrialSetOnDisk) {
  test::TempDir dir;
  TrialSetSpec spec;
  spec.per_task = 2;
  spec.seed = 4;
  const auto paths = write_trial_set(test::shared_corpus(), spec, dir.path());
  ASSERT_EQ(paths.size(), 6u);
  const auto set = load_trial_set(dir / "trials");
  ASSERT_EQ(set.size(), 6u);
  for (const auto& t : set) {
    EXPECT_FALSE(t.audio.empty());
    EXPECT_FALSE(oracle::check_ground_truth(t).has_value());
  }
}

}  // namespace
}  // namespace ttc
