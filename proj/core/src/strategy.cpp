#include "ttc/strategy.hpp"

#include <algorithm>
#include <sstream>

#include "ttc/canonical.hpp"
#include "ttc/error.hpp"

namespace ttc {

std::string_view to_string(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::Direct: return "no-ttc";
    case StrategyKind::CoT: return "cot";
    case StrategyKind::Majority: return "majority";
    case StrategyKind::BSW: return "bs-w";
    case StrategyKind::LLMTop1: return "llm-top1";
    case StrategyKind::LLMW: return "llm-w";
  }
  return "?";
}

StrategyKind parse_strategy_kind(std::string_view text) {
  for (auto k : {StrategyKind::Direct, StrategyKind::CoT, StrategyKind::Majority, StrategyKind::BSW,
                 StrategyKind::LLMTop1, StrategyKind::LLMW}) {
    if (text == to_string(k)) return k;
  }
  if (text == "direct") return StrategyKind::Direct;
  throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

std::vector<double> default_temperature_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 5.0);
  return grid;
}

TieBreak StrategyConfig::effective_tie_break() const noexcept {
  if (tie_break) return *tie_break;
  return kind == StrategyKind::Majority ? TieBreak::LowestTemperature : TieBreak::FirstCandidate;
}

namespace {

bool is_llm(StrategyKind k) { return k == StrategyKind::LLMTop1 || k == StrategyKind::LLMW; }

std::string pair_name(const StrategyConfig& c, const BackendInfo& b) {
  return "strategy '" + c.label() + "' on backend '" + b.id + "'";
}

void check_temperature(const StrategyConfig& c, const BackendInfo& b, double t) {
  if (!b.temperature.contains(t)) {
    std::ostringstream msg;
    msg << pair_name(c, b) << ": temperature " << t << " outside the backend range " << b.temperature.describe();
    throw RangeError(msg.str());
  }
}

std::vector<double> sorted_grid(const StrategyConfig& c) {
  auto grid = c.temperature_grid;
  std::sort(grid.begin(), grid.end());
  return grid;
}

}  // namespace

bool uses_beams(const StrategyConfig& config, const BackendInfo& subject) noexcept {
  return (config.kind == StrategyKind::BSW || is_llm(config.kind)) && subject.caps.beam;
}

void validate_strategy(const StrategyConfig& c, const BackendInfo& subject, const BackendInfo* verifier) {
  const std::string who = pair_name(c, subject);
  if (!subject.caps.audio) throw CapabilityError(who + ": backend does not accept audio");
  if (c.max_tokens < 1) throw RangeError(who + ": max_tokens must be >= 1");
  switch (c.kind) {
    case StrategyKind::Direct:
    case StrategyKind::CoT:
      if (!subject.caps.sample) throw CapabilityError(who + ": backend cannot sample");
      check_temperature(c, subject, c.temperature);
      break;
    case StrategyKind::Majority:
      if (c.temperature_grid.size() < 2) throw RangeError(who + ": majority needs at least two temperatures");
      for (double t : c.temperature_grid) check_temperature(c, subject, t);
      break;
    case StrategyKind::BSW:
      if (!subject.caps.logprobs) throw CapabilityError(who + ": needs log-probabilities, backend is sample-only");
      if (subject.caps.beam) {
        if (c.beam_width < 1) throw RangeError(who + ": beam width must be >= 1");
        if (c.beam_width > subject.limits.max_beam_width) {
          throw RangeError(who + ": beam width " + std::to_string(c.beam_width) + " exceeds the backend limit " +
                           std::to_string(subject.limits.max_beam_width));
        }
      } else {
        for (double t : c.temperature_grid) check_temperature(c, subject, t);
      }
      break;
    case StrategyKind::LLMTop1:
    case StrategyKind::LLMW:
      if (!c.verifier_backend) throw ConfigError(who + ": no verifier backend configured");
      if (verifier == nullptr) throw ConfigError(who + ": verifier backend '" + *c.verifier_backend + "' is not registered");
      if (!verifier->caps.audio) throw CapabilityError(who + ": verifier '" + verifier->id + "' does not accept audio");
      if (!verifier->caps.sample) throw CapabilityError(who + ": verifier '" + verifier->id + "' cannot sample");
      if (!verifier->temperature.contains(c.verifier_policy.temperature)) {
        throw RangeError(who + ": verifier temperature outside the range of '" + verifier->id + "'");
      }
      if (c.verifier_policy.max_attempts < 1) throw RangeError(who + ": verifier max_attempts must be >= 1");
      if (subject.caps.beam) {
        if (c.beam_width < 1 || c.beam_width > subject.limits.max_beam_width) {
          throw RangeError(who + ": beam width " + std::to_string(c.beam_width) + " outside [1, " +
                           std::to_string(subject.limits.max_beam_width) + "]");
        }
      } else {
        if (c.temperature_grid.empty()) throw RangeError(who + ": empty temperature grid");
        for (double t : c.temperature_grid) check_temperature(c, subject, t);
      }
      break;
  }
}

int planned_calls(const StrategyConfig& c, const BackendInfo& subject) {
  const int grid = static_cast<int>(c.temperature_grid.size());
  switch (c.kind) {
    case StrategyKind::Direct:
    case StrategyKind::CoT: return 1;
    case StrategyKind::Majority: return grid;
    case StrategyKind::BSW: return subject.caps.beam ? 1 : grid;
    case StrategyKind::LLMTop1:
    case StrategyKind::LLMW: {
      const int subject_calls = subject.caps.beam ? 1 : grid;
      const int candidates = subject.caps.beam ? c.beam_width : grid;
      return subject_calls + candidates * std::max(1, c.verifier_policy.max_attempts);
    }
  }
  return 0;
}

namespace {

StrategyRun run_unannotated(const StrategyConfig& config, const Trial& trial, const std::string& subject_backend,
                            Dispatcher& dispatcher) {
  const BackendInfo& subject = dispatcher.gateway().info(subject_backend);
  const SuffixPolicy suffix = subject.verbose ? SuffixPolicy::JustOutputAnswer : SuffixPolicy::None;
  PromptBundle prompt = build_base_prompt(trial, suffix);
  if (config.kind == StrategyKind::CoT) prompt = apply_cot(prompt, trial.task);
  if (is_llm(config.kind)) prompt = request_explanation(prompt);

  const EncodedAudio audio = encode_audio(trial.audio);
  QueryRequest base;
  base.backend_id = subject_backend;
  base.model_id = subject.model;
  base.audio = audio;
  base.prompt = prompt;
  base.decode.max_tokens = config.max_tokens;
  base.oracle_hint = OracleHint{trial.task, trial.options, trial.ground_truth};

  StrategyRun run;
  auto issue = [&](QueryRequest request, const std::string& tag) {
    request.request_id = trial.id + "/" + config.label() + "/" + tag;
    auto result = dispatcher.dispatch(request);
    if (result.cache_hit) {
      ++run.cache_hits;
    } else {
      ++run.backend_calls;
    }
    for (auto& c : result.response.candidates) {
      c.canonical = canonicalize_answer(c.text, trial.options);
      run.candidates.push_back(std::move(c));
    }
  };
  auto sample_at = [&](double t, bool logprobs) {
    QueryRequest r = base;
    r.decode.mode = DecodeMode::Sample;
    r.decode.temperature = t;
    r.decode.num_samples = 1;
    r.want_logprobs = logprobs;
    std::ostringstream tag;
    tag << "t" << t;
    issue(std::move(r), tag.str());
  };
  auto beams = [&](int width) {
    QueryRequest r = base;
    r.decode.mode = DecodeMode::Beam;
    r.decode.beam_width = width;
    r.want_logprobs = true;
    issue(std::move(r), "b" + std::to_string(width));
  };
  auto collect = [&](bool need_logprobs) {
    if (uses_beams(config, subject)) {
      beams(config.beam_width);
      run.candidate_source = "beam";
    } else {
      for (double t : sorted_grid(config)) sample_at(t, need_logprobs);
      run.candidate_source = "sample-grid";
    }
  };

  const std::size_t n_options = trial.options.size();
  const TieBreak tie = config.effective_tie_break();
  switch (config.kind) {
    case StrategyKind::Direct:
    case StrategyKind::CoT:
      sample_at(config.temperature, false);
      run.candidate_source = "sample";
      run.outcome = majority_vote(run.candidates, n_options, tie);
      run.outcome.decision_rule = "single";
      break;
    case StrategyKind::Majority:
      for (double t : sorted_grid(config)) sample_at(t, false);
      run.candidate_source = "sample-grid";
      run.outcome = majority_vote(run.candidates, n_options, tie);
      break;
    case StrategyKind::BSW:
      collect(true);
      run.outcome = weight_by_loglik(run.candidates, n_options, {config.raw_weights, config.length_norm, tie});
      break;
    case StrategyKind::LLMTop1:
    case StrategyKind::LLMW: {
      collect(false);
      std::vector<double> scores;
      for (auto& c : run.candidates) {
        auto s = score_candidate(trial, audio, c, dispatcher, *config.verifier_backend, config.verifier_policy);
        run.backend_calls += s.backend_calls;
        run.cache_hits += s.cache_hits;
        scores.push_back(s.rating);
        if (config.verifier_answer_mode && s.selected_option) {
          c.canonical = CanonicalAnswer{s.selected_option, MatchRule::Exact};
        }
        run.verifier_scores.push_back(std::move(s));
      }
      const auto mode = config.kind == StrategyKind::LLMTop1 ? VerifierMode::Top1 : VerifierMode::Weighted;
      run.outcome = verifier_select(run.candidates, scores, mode, n_options, tie);
      break;
    }
  }
  return run;
}

}  // namespace

StrategyRun run_strategy(const StrategyConfig& config, const Trial& trial, const std::string& subject_backend,
                         Dispatcher& dispatcher) {
  const std::string ctx = "trial '" + trial.id + "', strategy '" + config.label() + "': ";
  try {
    return run_unannotated(config, trial, subject_backend, dispatcher);
  } catch (const BackendError& e) {
    throw BackendError(e.kind(), ctx + e.what());
  } catch (const CapabilityError& e) {
    throw CapabilityError(ctx + e.what());
  } catch (const RangeError& e) {
    throw RangeError(ctx + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(ctx + e.what());
  } catch (const IoError& e) {
    throw IoError(ctx + e.what());
  } catch (const Error& e) {
    throw Error(ctx + e.what());
  }
}

}  // namespace ttc
