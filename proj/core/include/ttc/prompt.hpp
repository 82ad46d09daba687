#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "ttc/trial.hpp"

namespace ttc {

enum class SuffixPolicy { None, JustOutputAnswer };

struct PromptBundle {
  std::optional<std::string> system_text;
  std::string user_text;
  bool cot_applied = false;
  bool explanation_requested = false;
  SuffixPolicy suffix_policy = SuffixPolicy::None;
  /// Byte offset of the post-audio question inside user_text.
  std::size_t question_offset = 0;
};

inline constexpr std::string_view kSelectClause = " Select the best option from the following: ";
inline constexpr std::string_view kNoExplanation = " No explanation is needed.";
inline constexpr std::string_view kJustOutputAnswer = "Just output the selected answer";
inline constexpr std::string_view kExplainRequest =
    " Explain your reasoning in one or two sentences, then state the selected answer.";

/// Version tag of the shipped prompt assets.
std::string_view prompt_assets_version() noexcept;

/// Raw text of a shipped asset ("cot_task1", "cot_task2", "cot_task3", "verifier").
std::string_view prompt_asset(std::string_view name);

/// Python-list style rendering: ['6,2', '2,2'].
std::string render_options(std::span<const std::string> options);

PromptBundle build_base_prompt(const Trial& trial, SuffixPolicy suffix_policy = SuffixPolicy::None);

/// Inserts the task's reasoning paragraph in front of the question.
/// Throws ConfigError when the bundle already carries one.
PromptBundle apply_cot(const PromptBundle& prompt, TaskKind task);

/// Swaps the "no explanation" instruction for a request to justify the
/// answer; used when responses are later judged by a verifier. Any
/// answer-only suffix is dropped.
PromptBundle request_explanation(const PromptBundle& prompt);

std::string_view cot_paragraph(TaskKind task);

}  // namespace ttc
