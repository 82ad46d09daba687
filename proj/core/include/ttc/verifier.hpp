#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "ttc/cache.hpp"
#include "ttc/candidate.hpp"
#include "ttc/prompt.hpp"
#include "ttc/trial.hpp"

namespace ttc {

struct VerifierScore {
  double rating = 0.0;  // in [0, 1]
  std::string analysis;
  std::optional<std::size_t> selected_option;
  std::string selected_text;
  std::string parse_trace;
  bool clamped = false;
  bool fallback = false;
  int attempts = 0;
  int backend_calls = 0;
  int cache_hits = 0;
};

/// Fills the shipped judge template with the trial's question (instruction
/// included), its options in bracket form and the candidate's text.
PromptBundle build_verifier_prompt(const Trial& trial, const Candidate& candidate);

/// Reads the first RATING value (clamped into [0, 1]), the ANALYSIS text and
/// the SELECTED OPTION or YOUR ANSWER field, which is canonicalized against
/// `options`. Throws MalformedVerifierOutput when no rating is present.
VerifierScore parse_verifier_response(std::string_view text, std::span<const std::string> options);

struct VerifierPolicy {
  int max_attempts = 3;
  double fallback_rating = 0.5;
  double temperature = 0.0;
  int max_tokens = 256;
};

/// Asks the judge backend about one candidate. Malformed answers are retried
/// up to max_attempts times, each attempt being a distinct request; after
/// that the fallback rating is returned with `fallback` set.
VerifierScore score_candidate(const Trial& trial, const EncodedAudio& audio, const Candidate& candidate,
                              Dispatcher& dispatcher, const std::string& verifier_backend,
                              const VerifierPolicy& policy = {});

}  // namespace ttc
