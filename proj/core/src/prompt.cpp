#include "ttc/prompt.hpp"

#include "ttc/error.hpp"

namespace ttc {

namespace detail {
// Generated from core/assets/prompts at configure time.
std::string_view find_prompt_asset(std::string_view name) noexcept;
extern const char* const kPromptAssetsVersion;
}  // namespace detail

std::string_view prompt_assets_version() noexcept { return detail::kPromptAssetsVersion; }

std::string_view prompt_asset(std::string_view name) {
  auto text = detail::find_prompt_asset(name);
  if (text.data() == nullptr) throw ConfigError("unknown prompt asset '" + std::string(name) + "'");
  return text;
}

std::string render_options(std::span<const std::string> options) {
  std::string out = "[";
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (i > 0) out += ", ";
    const bool has_single = options[i].find('\'') != std::string::npos;
    const bool has_double = options[i].find('"') != std::string::npos;
    const char quote = has_single && !has_double ? '"' : '\'';
    out += quote;
    out += options[i];
    out += quote;
  }
  out += "]";
  return out;
}

PromptBundle build_base_prompt(const Trial& trial, SuffixPolicy suffix_policy) {
  PromptBundle bundle;
  bundle.suffix_policy = suffix_policy;
  std::string& text = bundle.user_text;
  text = trial.pre_instruction;
  text += ' ';
  bundle.question_offset = text.size();
  text += trial.question;
  text += kSelectClause;
  text += render_options(trial.options);
  text += '.';
  text += kNoExplanation;
  if (suffix_policy == SuffixPolicy::JustOutputAnswer) {
    text += ' ';
    text += kJustOutputAnswer;
  }
  return bundle;
}

std::string_view cot_paragraph(TaskKind task) {
  switch (task) {
    case TaskKind::Task1Event: return prompt_asset("cot_task1");
    case TaskKind::Task2Speech: return prompt_asset("cot_task2");
    case TaskKind::Task3Overlap: return prompt_asset("cot_task3");
  }
  throw ConfigError("no reasoning paragraph for task kind " + std::to_string(static_cast<int>(task)));
}

PromptBundle apply_cot(const PromptBundle& prompt, TaskKind task) {
  if (prompt.cot_applied) throw ConfigError("apply_cot: reasoning paragraph already applied");
  if (prompt.question_offset > prompt.user_text.size()) {
    throw ConfigError("apply_cot: question offset outside prompt text");
  }
  const auto paragraph = cot_paragraph(task);
  PromptBundle out = prompt;
  std::string insert(paragraph);
  insert += ' ';
  out.user_text.insert(prompt.question_offset, insert);
  out.question_offset = prompt.question_offset + insert.size();
  out.cot_applied = true;
  return out;
}

PromptBundle request_explanation(const PromptBundle& prompt) {
  PromptBundle out = prompt;
  if (out.suffix_policy == SuffixPolicy::JustOutputAnswer) {
    const std::string suffix = " " + std::string(kJustOutputAnswer);
    if (out.user_text.ends_with(suffix)) out.user_text.resize(out.user_text.size() - suffix.size());
    out.suffix_policy = SuffixPolicy::None;
  }
  const auto pos = out.user_text.rfind(kNoExplanation);
  if (pos != std::string::npos) {
    out.user_text.replace(pos, kNoExplanation.size(), kExplainRequest);
  } else {
    out.user_text += kExplainRequest;
  }
  out.explanation_requested = true;
  return out;
}

}  // namespace ttc
