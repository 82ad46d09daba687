#include <gtest/gtest.h>

#include "test_support.hpp"
#include "ttc/error.hpp"
#include "ttc/prompt.hpp"

namespace ttc {
namespace {

TEST(Prompt, Task1Example) {
  const auto t = test::make_trial(TaskKind::Task1Event, {"Yes", "No"}, 0);
  const auto p = build_base_prompt(t);
  EXPECT_EQ(p.user_text,
            "Focus on ANIMAL sound. Did you hear the cat meowing? Select the best option from the following: "
            "['Yes', 'No']. No explanation is needed.");
  EXPECT_EQ(p.user_text.substr(p.question_offset, 29), "Did you hear the cat meowing?");
  EXPECT_FALSE(p.system_text.has_value());
}

TEST(Prompt, Task2ExampleWithSuffix) {
  auto t = test::make_trial(TaskKind::Task2Speech, {"6,2", "2,2"}, 0);
  t.question = "What is the LAST TWO digits spoken by male?";
  EXPECT_EQ(build_base_prompt(t).user_text,
            "Listen carefully. What is the LAST TWO digits spoken by male? Select the best option from the "
            "following: ['6,2', '2,2']. No explanation is needed.");
  const auto verbose = build_base_prompt(t, SuffixPolicy::JustOutputAnswer);
  EXPECT_TRUE(verbose.user_text.ends_with("No explanation is needed. Just output the selected answer"));
}

TEST(Prompt, RenderOptionsQuotes) {
  EXPECT_EQ(render_options(std::vector<std::string>{"4", "6", "8", "9"}), "['4', '6', '8', '9']");
  EXPECT_EQ(render_options(std::vector<std::string>{"it's"}), "[\"it's\"]");
}

TEST(Prompt, CotInsertsParagraphBeforeQuestion) {
  const auto t = test::make_trial(TaskKind::Task1Event, {"Yes", "No"}, 0);
  const auto base = build_base_prompt(t);
  const auto cot = apply_cot(base, TaskKind::Task1Event);
  EXPECT_TRUE(cot.cot_applied);
  const std::string para(cot_paragraph(TaskKind::Task1Event));
  EXPECT_EQ(cot.user_text, "Focus on ANIMAL sound. " + para + " " + base.user_text.substr(base.question_offset));
  EXPECT_EQ(cot.user_text.substr(cot.question_offset, 12), "Did you hear");
  EXPECT_THROW(apply_cot(cot, TaskKind::Task1Event), ConfigError);
}

TEST(Prompt, CotParagraphsAreDistinctAndVersioned) {
  EXPECT_EQ(prompt_assets_version(), "v1");
  EXPECT_TRUE(cot_paragraph(TaskKind::Task1Event).starts_with("There are different sound events"));
  EXPECT_NE(cot_paragraph(TaskKind::Task2Speech), cot_paragraph(TaskKind::Task3Overlap));
  EXPECT_THROW(prompt_asset("no-such-asset"), ConfigError);
}

TEST(Prompt, VerifierTemplateSectionOrder) {
  const std::string tmpl(prompt_asset("verifier"));
  const char* sections[] = {"{question}", "{options}", "Machine's Response:", "Evaluation Process:",
                            "Scoring Criteria:", "Evaluation Format:", "RATING:", "ANALYSIS:", "SELECTED OPTION:"};
  std::size_t pos = 0;
  for (const char* s : sections) {
    const auto at = tmpl.find(s, pos);
    ASSERT_NE(at, std::string::npos) << s;
    pos = at;
  }
}

TEST(Prompt, RequestExplanationDropsSuffix) {
  const auto t = test::make_trial(TaskKind::Task1Event, {"Yes", "No"}, 0);
  const auto p = request_explanation(build_base_prompt(t, SuffixPolicy::JustOutputAnswer));
  EXPECT_TRUE(p.explanation_requested);
  EXPECT_EQ(p.suffix_policy, SuffixPolicy::None);
  EXPECT_EQ(p.user_text.find("No explanation is needed"), std::string::npos);
  EXPECT_EQ(p.user_text.find("Just output"), std::string::npos);
  EXPECT_TRUE(p.user_text.ends_with(std::string(kExplainRequest)));
}

}  // namespace
}  // namespace ttc
