#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ttc/aggregate.hpp"
#include "ttc/cache.hpp"
#include "ttc/trial.hpp"
#include "ttc/verifier.hpp"

namespace ttc {

enum class StrategyKind { Direct, CoT, Majority, BSW, LLMTop1, LLMW };

/// Short names used in configs and records: no-ttc, cot, majority, bs-w,
/// llm-top1, llm-w.
std::string_view to_string(StrategyKind kind) noexcept;
StrategyKind parse_strategy_kind(std::string_view text);

/// 0.0, 0.2, ..., 2.0
std::vector<double> default_temperature_grid();

struct StrategyConfig {
  StrategyKind kind = StrategyKind::Direct;
  std::string name;  // record label; defaults to the kind's name
  std::vector<double> temperature_grid = default_temperature_grid();
  int beam_width = 4;
  double temperature = 0.0;  // Direct and CoT
  std::optional<std::string> verifier_backend;
  std::optional<TieBreak> tie_break;  // default depends on kind
  bool raw_weights = false;
  LengthNorm length_norm = LengthNorm::None;
  bool verifier_answer_mode = false;
  VerifierPolicy verifier_policy{};
  int max_tokens = 128;

  std::string label() const { return name.empty() ? std::string(to_string(kind)) : name; }
  TieBreak effective_tie_break() const noexcept;
};

/// Throws CapabilityError or RangeError naming the strategy and backend when
/// the pair cannot run. `verifier` is required for the LLM strategies.
void validate_strategy(const StrategyConfig& config, const BackendInfo& subject, const BackendInfo* verifier);

/// Upper bound on backend calls one cell may issue (verifier retries included).
int planned_calls(const StrategyConfig& config, const BackendInfo& subject);

/// True when candidates come from beams rather than a temperature sweep.
bool uses_beams(const StrategyConfig& config, const BackendInfo& subject) noexcept;

struct StrategyRun {
  StrategyOutcome outcome;
  std::vector<Candidate> candidates;  // ordered by temperature, then beam rank
  std::vector<VerifierScore> verifier_scores;
  std::string candidate_source;  // "sample", "beam" or "sample-grid"
  int backend_calls = 0;
  int cache_hits = 0;
};

/// Executes one strategy on one trial against `subject_backend`. Errors are
/// rethrown with the trial id prepended.
StrategyRun run_strategy(const StrategyConfig& config, const Trial& trial, const std::string& subject_backend,
                         Dispatcher& dispatcher);

}  // namespace ttc
