#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ttc/canonical.hpp"

namespace ttc {

/// One model response together with its decoding trace.
struct Candidate {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<double> token_logprobs;  // log P(token_t | prefix, audio, prompt)
  std::optional<double> cum_logprob;   // sum of token_logprobs when present
  double temperature = 0.0;            // sampling temperature used; 0 for beams
  int beam_rank = -1;                  // position in a beam response, -1 for samples
  CanonicalAnswer canonical;

  bool has_logprobs() const noexcept { return cum_logprob.has_value(); }
};

/// Throws BackendError(Malformed) when token/logprob lengths disagree, the
/// cumulative log-probability is positive, or it deviates from the token
/// sum by more than `tolerance`.
void validate_candidate(const Candidate& c, double tolerance = 1e-6);

}  // namespace ttc
