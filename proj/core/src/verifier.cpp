#include "ttc/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "ttc/canonical.hpp"
#include "ttc/error.hpp"

namespace ttc {
namespace {

void replace_all(std::string& text, std::string_view from, std::string_view to) {
  for (std::size_t at = text.find(from); at != std::string::npos; at = text.find(from, at + to.size())) {
    text.replace(at, from.size(), to);
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Optional bullet or emphasis around a field label, then an optional
// separator (colon or table cell marker).
const std::string kLead = R"((?:^|\n)[ \t]*(?:(?:[-*]|•)[ \t]*)?(?:\*\*|__|\\textbf\{)?)";
const std::string kTail = R"((?:\*\*|__|\})?[ \t]*(?::|&)?[ \t]*(?:\*\*)?[ \t]*(?:&[ \t]*)?)";

const std::regex& rating_re() {
  static const std::regex re(kLead + "RATING" + kTail + R"(([-+]?(?:\d+(?:\.\d*)?|\.\d+)))",
                             std::regex::icase);
  return re;
}
const std::regex& analysis_re() {
  static const std::regex re(kLead + "ANALYSIS" + kTail, std::regex::icase);
  return re;
}
const std::regex& selected_re() {
  static const std::regex re(kLead + "(SELECTED[ \t]+OPTION|YOUR[ \t]+ANSWER)" + kTail + R"(([^\n]*))",
                             std::regex::icase);
  return re;
}

}  // namespace

PromptBundle build_verifier_prompt(const Trial& trial, const Candidate& candidate) {
  std::string text(prompt_asset("verifier"));
  const std::string question = trial.pre_instruction.empty() ? trial.question : trial.pre_instruction + " " + trial.question;
  replace_all(text, "{question}", question);
  replace_all(text, "{options}", render_options(trial.options));
  replace_all(text, "{response}", candidate.text);
  PromptBundle bundle;
  bundle.user_text = std::move(text);
  return bundle;
}

VerifierScore parse_verifier_response(std::string_view text, std::span<const std::string> options) {
  const std::string body(text);
  VerifierScore score;

  std::smatch m;
  if (!std::regex_search(body, m, rating_re())) {
    throw MalformedVerifierOutput("verifier response has no RATING field");
  }
  const double raw = std::stod(m[1].str());
  if (!std::isfinite(raw)) throw MalformedVerifierOutput("verifier RATING is not finite");
  score.rating = std::clamp(raw, 0.0, 1.0);
  score.clamped = score.rating != raw;
  score.parse_trace = "rating";
  if (score.clamped) score.parse_trace += "(clamped)";

  std::smatch sel;
  const bool has_selected = std::regex_search(body, sel, selected_re());
  std::smatch an;
  if (std::regex_search(body, an, analysis_re())) {
    const auto start = static_cast<std::size_t>(an.position(0) + an.length(0));
    std::size_t stop = body.size();
    if (has_selected && static_cast<std::size_t>(sel.position(0)) > start) stop = static_cast<std::size_t>(sel.position(0));
    score.analysis = trim(std::string_view(body).substr(start, stop - start));
    score.parse_trace += ";analysis";
  }
  if (has_selected) {
    score.selected_text = trim(sel[2].str());
    const auto canonical = canonicalize_answer(score.selected_text, options);
    score.selected_option = canonical.option;
    score.parse_trace += ";selected:" + std::string(to_string(canonical.rule));
  }
  return score;
}

VerifierScore score_candidate(const Trial& trial, const EncodedAudio& audio, const Candidate& candidate,
                              Dispatcher& dispatcher, const std::string& verifier_backend,
                              const VerifierPolicy& policy) {
  const auto& info = dispatcher.gateway().info(verifier_backend);
  QueryRequest request;
  request.backend_id = verifier_backend;
  request.model_id = info.model;
  request.audio = audio;
  request.prompt = build_verifier_prompt(trial, candidate);
  request.decode.mode = DecodeMode::Sample;
  request.decode.temperature = policy.temperature;
  request.decode.num_samples = 1;
  request.decode.max_tokens = policy.max_tokens;
  request.oracle_hint = OracleHint{trial.task, trial.options, trial.ground_truth};

  VerifierScore last;
  int calls = 0;
  int hits = 0;
  const int attempts = std::max(1, policy.max_attempts);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    request.attempt = attempt;
    request.request_id = trial.id + "/verify/" + std::to_string(attempt);
    auto result = dispatcher.dispatch(request);
    if (result.cache_hit) {
      ++hits;
    } else {
      ++calls;
    }
    if (result.response.candidates.empty()) continue;
    try {
      VerifierScore score = parse_verifier_response(result.response.candidates.front().text, trial.options);
      score.attempts = attempt + 1;
      score.backend_calls = calls;
      score.cache_hits = hits;
      return score;
    } catch (const MalformedVerifierOutput&) {
    }
  }
  last.rating = policy.fallback_rating;
  last.fallback = true;
  last.attempts = attempts;
  last.backend_calls = calls;
  last.cache_hits = hits;
  last.parse_trace = "fallback";
  return last;
}

}  // namespace ttc
