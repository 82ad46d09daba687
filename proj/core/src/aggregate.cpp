#include "ttc/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ttc/error.hpp"

namespace ttc {

std::string_view to_string(TieBreak t) noexcept {
  switch (t) {
    case TieBreak::LowestTemperature: return "lowest-temperature";
    case TieBreak::FirstCandidate: return "first-candidate";
    case TieBreak::LexSmallestOption: return "lex-smallest-option";
  }
  return "?";
}

std::string_view to_string(WeightSource w) noexcept {
  switch (w) {
    case WeightSource::LogLikSoftmax: return "loglik-softmax";
    case WeightSource::LogLikRaw: return "loglik-raw";
    case WeightSource::VerifierScore: return "verifier-score";
    case WeightSource::Uniform: return "uniform";
  }
  return "?";
}

std::string_view to_string(VerifierMode m) noexcept { return m == VerifierMode::Top1 ? "top1" : "weighted"; }
std::string_view to_string(LengthNorm n) noexcept { return n == LengthNorm::None ? "none" : "per-token-mean"; }

TieBreak parse_tie_break(std::string_view text) {
  if (text == "lowest-temperature") return TieBreak::LowestTemperature;
  if (text == "first-candidate") return TieBreak::FirstCandidate;
  if (text == "lex-smallest-option") return TieBreak::LexSmallestOption;
  throw ConfigError("unknown tie_break '" + std::string(text) + "'");
}

VerifierMode parse_verifier_mode(std::string_view text) {
  if (text == "top1") return VerifierMode::Top1;
  if (text == "weighted") return VerifierMode::Weighted;
  throw ConfigError("unknown verifier mode '" + std::string(text) + "'");
}

LengthNorm parse_length_norm(std::string_view text) {
  if (text == "none") return LengthNorm::None;
  if (text == "per-token-mean") return LengthNorm::PerTokenMean;
  throw ConfigError("unknown length_norm '" + std::string(text) + "'");
}

namespace {

void require_candidates(std::span<const Candidate> candidates, std::size_t option_count) {
  if (candidates.empty()) throw ConfigError("aggregation needs at least one candidate");
  for (const auto& c : candidates) {
    if (c.canonical.option && *c.canonical.option >= option_count) {
      throw ConfigError("candidate mapped to option " + std::to_string(*c.canonical.option) + " of " +
                        std::to_string(option_count));
    }
  }
}

/// Resolves a tie among `tied` options. Candidate-based rules only look at
/// candidates flagged in `eligible` (all when null).
std::size_t break_tie(const std::vector<std::size_t>& tied, std::span<const Candidate> candidates, TieBreak rule,
                      const std::vector<bool>* eligible) {
  if (rule == TieBreak::LexSmallestOption) return *std::min_element(tied.begin(), tied.end());
  std::optional<std::size_t> best_option;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& opt = candidates[i].canonical.option;
    if (!opt || std::find(tied.begin(), tied.end(), *opt) == tied.end()) continue;
    if (eligible != nullptr && !(*eligible)[i]) continue;
    if (!best_option) {
      best_option = opt;
      best_index = i;
      continue;
    }
    if (rule == TieBreak::LowestTemperature && candidates[i].temperature < candidates[best_index].temperature) {
      best_option = opt;
      best_index = i;
    }
  }
  return best_option.value_or(tied.front());
}

void decide(StrategyOutcome& out, std::span<const Candidate> candidates, TieBreak rule,
            const std::vector<bool>* eligible = nullptr) {
  out.tie_break = rule;
  out.mapped_candidates = static_cast<std::size_t>(
      std::count_if(candidates.begin(), candidates.end(), [](const Candidate& c) { return c.canonical.mapped(); }));
  if (out.mapped_candidates == 0) return;

  // Only options that some Mapped candidate supports are eligible.
  std::vector<bool> supported(out.option_scores.size(), false);
  for (const auto& c : candidates) {
    if (c.canonical.option) supported[*c.canonical.option] = true;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t o = 0; o < out.option_scores.size(); ++o) {
    if (supported[o]) best = std::max(best, out.option_scores[o]);
  }
  std::vector<std::size_t> tied;
  for (std::size_t o = 0; o < out.option_scores.size(); ++o) {
    if (supported[o] && std::fabs(out.option_scores[o] - best) <= kScoreTieTolerance) tied.push_back(o);
  }
  out.tie_broken = tied.size() > 1;
  out.final_answer = tied.size() == 1 ? tied.front() : break_tie(tied, candidates, rule, eligible);
}

}  // namespace

StrategyOutcome majority_vote(std::span<const Candidate> candidates, std::size_t option_count, TieBreak tie_break) {
  require_candidates(candidates, option_count);
  StrategyOutcome out;
  out.weight_source = WeightSource::Uniform;
  out.decision_rule = "majority";
  out.option_scores.assign(option_count, 0.0);
  for (const auto& c : candidates) {
    out.weights.push_back(c.canonical.mapped() ? 1.0 : 0.0);
    if (c.canonical.option) out.option_scores[*c.canonical.option] += 1.0;
  }
  decide(out, candidates, tie_break);
  return out;
}

StrategyOutcome weight_by_loglik(std::span<const Candidate> candidates, std::size_t option_count,
                                 const LoglikOptions& options) {
  require_candidates(candidates, option_count);
  std::vector<double> scores;
  for (const auto& c : candidates) {
    if (!c.cum_logprob) throw CapabilityError("log-likelihood weighting needs cumulative log-probabilities");
    double s = *c.cum_logprob;
    if (options.length_norm == LengthNorm::PerTokenMean && !c.tokens.empty()) s /= static_cast<double>(c.tokens.size());
    scores.push_back(s);
  }

  StrategyOutcome out;
  out.option_scores.assign(option_count, 0.0);
  if (options.raw_weights) {
    out.weight_source = WeightSource::LogLikRaw;
    out.decision_rule = "loglik-raw-sum";
    out.weights = scores;
  } else {
    out.weight_source = WeightSource::LogLikSoftmax;
    out.decision_rule = "loglik-softmax-sum";
    const double m = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double s : scores) z += std::exp(s - m);
    for (double s : scores) out.weights.push_back(std::exp(s - m) / z);
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].canonical.option) out.option_scores[*candidates[i].canonical.option] += out.weights[i];
  }
  decide(out, candidates, options.tie_break);
  return out;
}

StrategyOutcome verifier_select(std::span<const Candidate> candidates, std::span<const double> scores,
                                VerifierMode mode, std::size_t option_count, TieBreak tie_break) {
  require_candidates(candidates, option_count);
  if (scores.size() != candidates.size()) {
    throw ConfigError("verifier_select needs one score per candidate (" + std::to_string(candidates.size()) +
                      " candidates, " + std::to_string(scores.size()) + " scores)");
  }
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw RangeError("verifier score outside [0, 1]");
  }

  StrategyOutcome out;
  out.weight_source = WeightSource::VerifierScore;
  out.weights.assign(scores.begin(), scores.end());
  out.option_scores.assign(option_count, 0.0);
  if (mode == VerifierMode::Weighted) {
    out.decision_rule = "verifier-weighted-sum";
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i].canonical.option) out.option_scores[*candidates[i].canonical.option] += scores[i];
    }
  } else {
    out.decision_rule = "verifier-top1";
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (auto o = candidates[i].canonical.option) out.option_scores[*o] = std::max(out.option_scores[*o], scores[i]);
    }
    double best = -1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i].canonical.mapped()) best = std::max(best, scores[i]);
    }
    std::vector<bool> at_best(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) at_best[i] = std::fabs(scores[i] - best) <= kScoreTieTolerance;
    decide(out, candidates, tie_break, &at_best);
    return out;
  }
  decide(out, candidates, tie_break);
  return out;
}

}  // namespace ttc
