#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "ttc/trial.hpp"

namespace ttc {

/// Rule that produced a mapping. Unmapped answers record the last rule tried.
enum class MatchRule { Exact, Normalized, BracketList, Embedded, None };

std::string_view to_string(MatchRule rule) noexcept;
MatchRule parse_match_rule(std::string_view text);

struct CanonicalAnswer {
  std::optional<std::size_t> option;  // empty = Unmapped
  MatchRule rule = MatchRule::None;

  bool mapped() const noexcept { return option.has_value(); }
  friend bool operator==(const CanonicalAnswer&, const CanonicalAnswer&) = default;
};

/// Maps free text onto exactly one option. Rules are tried in the fixed order
/// Exact, Normalized, BracketList, Embedded; the first rule that yields a
/// unique option wins. A rule matching two or more options makes the answer
/// Unmapped immediately (the ambiguous rule is recorded).
CanonicalAnswer canonicalize_answer(std::string_view raw, std::span<const std::string> options);

/// Case-folded text with quotes, brackets and punctuation turned into
/// whitespace and runs of whitespace collapsed.
std::string normalize_answer_text(std::string_view text);

/// Unmapped answers score as incorrect.
bool score_answer(const CanonicalAnswer& answer, const Trial& trial) noexcept;

}  // namespace ttc
