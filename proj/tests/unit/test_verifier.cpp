#include <gtest/gtest.h>

#include "test_support.hpp"
#include "ttc/error.hpp"
#include "ttc/oracle.hpp"
#include "ttc/verifier.hpp"

namespace ttc {
namespace {

using nlohmann::json;

const std::vector<std::string> kOrder{"6,7,9", "8,9,1", "6,9,1", "8,7,9"};

Trial order_trial() {
  auto t = test::make_trial(TaskKind::Task3Overlap, kOrder, 0, "order-1");
  t.pre_instruction = "Focus on digits order spoken by FEMALE.";
  t.question = "What is the order of last three digits spoken by female?";
  t.metadata.question_kind = QuestionKind::OrderLastThree;
  t.metadata.male_digits = {8, 9, 1};
  t.metadata.female_digits = {6, 7, 9};
  t.metadata.target_gender = TargetGender::Female;
  return t;
}

const char* kMachineResponse =
    "The sequence of digits spoken by the female is 6, 7, and 9. The sequence spoken by the male is 8, 9, and 1. "
    "Therefore, the last three digits spoken by the female are 9, 7, and 6. The answer is [6, 7, 9].";

TEST(VerifierPrompt, ContainsQuestionOptionsResponseAndCriteria) {
  const auto p = build_verifier_prompt(order_trial(), test::candidate(kMachineResponse));
  const auto& text = p.user_text;
  EXPECT_NE(text.find("Focus on digits order spoken by FEMALE. What is the order of last three digits spoken by female?"),
            std::string::npos);
  EXPECT_NE(text.find("['6,7,9', '8,9,1', '6,9,1', '8,7,9']"), std::string::npos);
  EXPECT_NE(text.find(std::string("Machine's Response:\n") + kMachineResponse + "\n\nEvaluation Process:"),
            std::string::npos);
  EXPECT_NE(text.find("Scoring Criteria:"), std::string::npos);
  EXPECT_EQ(text.find("{question}"), std::string::npos);
  EXPECT_EQ(text.find("{response}"), std::string::npos);
}

TEST(VerifierPrompt, ResponseTextIsNotReinterpreted) {
  const auto p = build_verifier_prompt(order_trial(), test::candidate("I would say {options} here"));
  EXPECT_NE(p.user_text.find("I would say {options} here"), std::string::npos);
}

TEST(VerifierParse, WorkedExample) {
  const auto text = test::read_file(std::filesystem::path(TTC_TEST_FIXTURES) / "verifier" / "judge_example.txt");
  const auto s = parse_verifier_response(text, kOrder);
  EXPECT_DOUBLE_EQ(s.rating, 0.8);
  ASSERT_TRUE(s.selected_option.has_value());
  EXPECT_EQ(kOrder[*s.selected_option], "6,7,9");
  EXPECT_TRUE(s.analysis.starts_with("The machine's response correctly identifies"));
  EXPECT_TRUE(s.analysis.ends_with("correctness of the identified digits."));
  EXPECT_FALSE(s.clamped);
}

TEST(VerifierParse, ConformantCorpusParsesCompletely) {
  const auto lines = test::read_lines(std::filesystem::path(TTC_TEST_FIXTURES) / "verifier" / "conformant.jsonl");
  ASSERT_EQ(lines.size(), 50u);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fx = json::parse(lines[i]);
    const auto options = fx["options"].get<std::vector<std::string>>();
    const auto s = parse_verifier_response(fx["text"].get<std::string>(), options);
    EXPECT_DOUBLE_EQ(s.rating, fx["rating"].get<double>()) << "fixture " << i;
    EXPECT_EQ(s.selected_option, fx["selected"].get<std::size_t>()) << "fixture " << i << ": " << s.selected_text;
    EXPECT_NE(s.analysis.find(fx["analysis"].get<std::string>()), std::string::npos) << "fixture " << i;
  }
}

TEST(VerifierParse, ClampsAndTakesFirstRating) {
  auto s = parse_verifier_response("RATING: 1.7\nANALYSIS: generous", kOrder);
  EXPECT_DOUBLE_EQ(s.rating, 1.0);
  EXPECT_TRUE(s.clamped);
  s = parse_verifier_response("RATING: -0.2", kOrder);
  EXPECT_DOUBLE_EQ(s.rating, 0.0);
  s = parse_verifier_response("RATING: 0.3\nRATING: 0.9", kOrder);
  EXPECT_DOUBLE_EQ(s.rating, 0.3);
  EXPECT_FALSE(s.selected_option.has_value());
}

TEST(VerifierParse, MissingRatingIsMalformed) {
  EXPECT_THROW(parse_verifier_response("ANALYSIS: fine\nSELECTED OPTION: 6,7,9", kOrder), MalformedVerifierOutput);
  EXPECT_THROW(parse_verifier_response("The rating is high.", kOrder), MalformedVerifierOutput);
  EXPECT_THROW(parse_verifier_response("", kOrder), MalformedVerifierOutput);
}

TEST(VerifierParse, UnmappableSelectionIsKeptAsText) {
  const auto s = parse_verifier_response("RATING: 0.4\nSELECTED OPTION: none of them", kOrder);
  EXPECT_FALSE(s.selected_option.has_value());
  EXPECT_EQ(s.selected_text, "none of them");
}

struct JudgeFixture {
  test::TempDir dir;
  std::shared_ptr<test::ScriptedBackend> judge;
  Gateway gateway;
  ResponseCache cache;
  Dispatcher dispatcher;

  explicit JudgeFixture(std::vector<std::string> replies)
      : judge(std::make_shared<test::ScriptedBackend>(test::sim_info("judge", {true, false, false, true}),
                                                      [replies](const QueryRequest&, int call) {
                                                        QueryResponse r;
                                                        const auto i = std::min<std::size_t>(static_cast<std::size_t>(call), replies.size() - 1);
                                                        r.candidates.push_back(test::candidate(replies[i]));
                                                        return r;
                                                      })),
        cache(dir.path()),
        dispatcher(gateway, &cache) {
    gateway.register_backend(judge);
  }
};

TEST(ScoreCandidate, RetriesMalformedThenSucceeds) {
  JudgeFixture f({"no idea", "still no idea", "RATING: 0.6\nSELECTED OPTION: 6,7,9"});
  const auto trial = order_trial();
  const auto s = score_candidate(trial, encode_audio(trial.audio), test::candidate(kMachineResponse), f.dispatcher, "judge");
  EXPECT_DOUBLE_EQ(s.rating, 0.6);
  EXPECT_EQ(s.attempts, 3);
  EXPECT_EQ(s.backend_calls, 3);
  EXPECT_FALSE(s.fallback);
  const auto requests = f.judge->requests();
  ASSERT_EQ(requests.size(), 3u);
  EXPECT_NE(request_key(requests[0]), request_key(requests[1]));
}

TEST(ScoreCandidate, FallsBackAfterMaxAttempts) {
  JudgeFixture f({"no idea"});
  const auto trial = order_trial();
  const auto s = score_candidate(trial, encode_audio(trial.audio), test::candidate(kMachineResponse), f.dispatcher, "judge");
  EXPECT_DOUBLE_EQ(s.rating, 0.5);
  EXPECT_TRUE(s.fallback);
  EXPECT_EQ(s.attempts, 3);
  EXPECT_EQ(f.judge->calls(), 3);

  VerifierPolicy policy;
  policy.max_attempts = 2;
  policy.fallback_rating = 0.25;
  JudgeFixture g({"no idea"});
  const auto t = score_candidate(trial, encode_audio(trial.audio), test::candidate("other"), g.dispatcher, "judge", policy);
  EXPECT_DOUBLE_EQ(t.rating, 0.25);
  EXPECT_EQ(g.judge->calls(), 2);
}

TEST(ScoreCandidate, DeterministicAcrossReplaysThroughCache) {
  JudgeFixture f({"garbage", "RATING: 0.7"});
  const auto trial = order_trial();
  const auto audio = encode_audio(trial.audio);
  const auto first = score_candidate(trial, audio, test::candidate(kMachineResponse), f.dispatcher, "judge");
  const auto again = score_candidate(trial, audio, test::candidate(kMachineResponse), f.dispatcher, "judge");
  EXPECT_DOUBLE_EQ(first.rating, 0.7);
  EXPECT_DOUBLE_EQ(again.rating, 0.7);
  EXPECT_EQ(again.attempts, 2);
  EXPECT_EQ(again.cache_hits, 2);
  EXPECT_EQ(again.backend_calls, 0);
  EXPECT_EQ(f.judge->calls(), 2);
}

TEST(SimulatedJudge, PerfectDetectionRatesByCorrectness) {
  auto gateway = std::make_unique<Gateway>();
  gateway->register_backend(std::make_shared<SimulatedVerifierBackend>(test::sim_info("judge", {true, false, false, true}),
                                                                       VerifierOracleConfig{1.0, 0.0, 3}));
  Dispatcher d(*gateway, nullptr);
  const auto trial = order_trial();
  const auto audio = encode_audio(trial.audio);
  const auto good = score_candidate(trial, audio, test::candidate("The answer is [6, 7, 9]."), d, "judge");
  const auto bad = score_candidate(trial, audio, test::candidate("The answer is [8, 9, 1]."), d, "judge");
  EXPECT_GE(good.rating, 0.9);
  EXPECT_LE(bad.rating, 0.1);
  EXPECT_EQ(good.selected_option, 0u);
}

TEST(SimulatedJudge, MalformedRateTriggersFallback) {
  Gateway gateway;
  gateway.register_backend(std::make_shared<SimulatedVerifierBackend>(test::sim_info("judge", {true, false, false, true}),
                                                                      VerifierOracleConfig{1.0, 1.0, 3}));
  Dispatcher d(gateway, nullptr);
  const auto trial = order_trial();
  const auto s = score_candidate(trial, encode_audio(trial.audio), test::candidate("6,7,9"), d, "judge");
  EXPECT_TRUE(s.fallback);
  EXPECT_DOUBLE_EQ(s.rating, 0.5);
}

}  // namespace
}  // namespace ttc
