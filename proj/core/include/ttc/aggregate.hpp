#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ttc/candidate.hpp"

namespace ttc {

enum class TieBreak { LowestTemperature, FirstCandidate, LexSmallestOption };
enum class WeightSource { LogLikSoftmax, LogLikRaw, VerifierScore, Uniform };
enum class VerifierMode { Top1, Weighted };
enum class LengthNorm { None, PerTokenMean };

std::string_view to_string(TieBreak t) noexcept;
std::string_view to_string(WeightSource w) noexcept;
std::string_view to_string(VerifierMode m) noexcept;
std::string_view to_string(LengthNorm n) noexcept;
TieBreak parse_tie_break(std::string_view text);
VerifierMode parse_verifier_mode(std::string_view text);
LengthNorm parse_length_norm(std::string_view text);

struct StrategyOutcome {
  std::optional<std::size_t> final_answer;  // empty = Unmapped
  std::vector<double> weights;              // one per candidate
  WeightSource weight_source = WeightSource::Uniform;
  std::vector<double> option_scores;        // one per option
  std::string decision_rule;
  TieBreak tie_break = TieBreak::FirstCandidate;
  bool tie_broken = false;
  std::size_t mapped_candidates = 0;
};

/// Scores closer than this count as tied.
inline constexpr double kScoreTieTolerance = 1e-12;

/// Counts one vote per Mapped candidate. Throws ConfigError on an empty list.
StrategyOutcome majority_vote(std::span<const Candidate> candidates, std::size_t option_count, TieBreak tie_break);

struct LoglikOptions {
  bool raw_weights = false;  // use cum_logprob itself as the weight
  LengthNorm length_norm = LengthNorm::None;
  TieBreak tie_break = TieBreak::FirstCandidate;
};

/// Softmax over the candidates' cumulative log-likelihoods, accumulated per
/// option. Throws CapabilityError when a candidate lacks log-probabilities.
StrategyOutcome weight_by_loglik(std::span<const Candidate> candidates, std::size_t option_count,
                                 const LoglikOptions& options = {});

/// Top1 picks the option of the best-scored Mapped candidate; Weighted sums
/// scores per option. Throws RangeError for scores outside [0, 1].
StrategyOutcome verifier_select(std::span<const Candidate> candidates, std::span<const double> scores,
                                VerifierMode mode, std::size_t option_count,
                                TieBreak tie_break = TieBreak::FirstCandidate);

}  // namespace ttc
