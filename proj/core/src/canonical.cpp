#include "ttc/canonical.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>
#include <vector>

#include "ttc/error.hpp"

namespace ttc {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string> tokens_of(const std::string& normalized) {
  std::vector<std::string> out;
  std::istringstream in(normalized);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

std::optional<std::vector<int>> digit_tuple(std::string_view text) {
  static const std::regex kTuple(R"(^\s*\d+(\s*,\s*\d+)*\s*$)");
  std::string s(text);
  if (!std::regex_match(s, kTuple)) return std::nullopt;
  std::vector<int> out;
  std::string cur;
  for (char c : s) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      cur += c;
    } else if (c == ',') {
      out.push_back(std::stoi(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::stoi(cur));
  return out;
}

std::vector<std::vector<int>> bracket_tuples(std::string_view raw) {
  static const std::regex kBracket(R"(\[\s*(\d+(?:\s*,\s*\d+)*)\s*\])");
  std::vector<std::vector<int>> out;
  std::string s(raw);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kBracket); it != std::sregex_iterator(); ++it) {
    if (auto t = digit_tuple((*it)[1].str())) out.push_back(std::move(*t));
  }
  return out;
}

/// Unique match -> option; ambiguous -> Unmapped with rule; none -> nullopt.
std::optional<CanonicalAnswer> decide(const std::set<std::size_t>& hits, MatchRule rule) {
  if (hits.empty()) return std::nullopt;
  if (hits.size() > 1) return CanonicalAnswer{std::nullopt, rule};
  return CanonicalAnswer{*hits.begin(), rule};
}

}  // namespace

std::string_view to_string(MatchRule rule) noexcept {
  switch (rule) {
    case MatchRule::Exact: return "exact";
    case MatchRule::Normalized: return "normalized";
    case MatchRule::BracketList: return "bracket_list";
    case MatchRule::Embedded: return "embedded";
    case MatchRule::None: return "none";
  }
  return "none";
}

MatchRule parse_match_rule(std::string_view text) {
  for (auto r : {MatchRule::Exact, MatchRule::Normalized, MatchRule::BracketList, MatchRule::Embedded,
                 MatchRule::None}) {
    if (text == to_string(r)) return r;
  }
  throw ConfigError("unknown match rule '" + std::string(text) + "'");
}

std::string normalize_answer_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    const bool keep = u >= 0x80 || std::isalnum(u);
    if (!keep) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(u < 0x80 ? std::tolower(u) : u);
  }
  return out;
}

CanonicalAnswer canonicalize_answer(std::string_view raw, std::span<const std::string> options) {
  const auto trimmed = trim(raw);

  for (std::size_t i = 0; i < options.size(); ++i) {
    if (trimmed == options[i]) return {i, MatchRule::Exact};
  }

  const std::string norm_raw = normalize_answer_text(trimmed);
  std::vector<std::string> norm_opts;
  norm_opts.reserve(options.size());
  for (const auto& o : options) norm_opts.push_back(normalize_answer_text(o));

  std::set<std::size_t> hits;
  if (!norm_raw.empty()) {
    for (std::size_t i = 0; i < options.size(); ++i) {
      if (norm_opts[i] == norm_raw) hits.insert(i);
    }
  }
  if (auto d = decide(hits, MatchRule::Normalized)) return *d;

  const auto tuples = bracket_tuples(trimmed);
  if (!tuples.empty()) {
    for (std::size_t i = 0; i < options.size(); ++i) {
      auto opt = digit_tuple(options[i]);
      if (!opt) continue;
      if (std::find(tuples.begin(), tuples.end(), *opt) != tuples.end()) hits.insert(i);
    }
  }
  if (auto d = decide(hits, MatchRule::BracketList)) return *d;

  const auto raw_tokens = tokens_of(norm_raw);
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (contains_run(raw_tokens, tokens_of(norm_opts[i]))) hits.insert(i);
  }
  if (auto d = decide(hits, MatchRule::Embedded)) return *d;

  return {std::nullopt, MatchRule::None};
}

bool score_answer(const CanonicalAnswer& answer, const Trial& trial) noexcept {
  return answer.option.has_value() && *answer.option == trial.ground_truth;
}

}  // namespace ttc
