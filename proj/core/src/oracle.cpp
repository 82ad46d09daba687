#include "ttc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ttc/beam.hpp"
#include "ttc/canonical.hpp"
#include "ttc/digest.hpp"
#include "ttc/error.hpp"
#include "ttc/wire.hpp"

namespace ttc {
namespace {

bool is_digit_tuple(const std::string& option) {
  if (option.find(',') == std::string::npos) return false;
  return std::all_of(option.begin(), option.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == ','; });
}

std::string bracket_form(const std::string& option) {
  if (!is_digit_tuple(option)) return option;
  std::string out = "[";
  for (char c : option) {
    if (c == ',') {
      out += ", ";
    } else {
      out += c;
    }
  }
  return out + "]";
}

std::vector<std::string> split_tokens(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> tokens;
  for (std::string t; in >> t;) tokens.push_back(t);
  return tokens;
}

const OracleHint& hint_of(const QueryRequest& request) {
  if (!request.oracle_hint) throw ConfigError("simulated backend needs a request carrying trial ground truth");
  const auto& h = *request.oracle_hint;
  if (h.options.size() < 2 || h.ground_truth >= h.options.size()) {
    throw ConfigError("simulated backend: invalid ground-truth hint");
  }
  return h;
}

double effective_verbosity(const PromptBundle& prompt, double q) {
  if (prompt.explanation_requested) return 1.0;
  if (prompt.suffix_policy == SuffixPolicy::JustOutputAnswer) return 0.0;
  return q;
}

std::size_t draw_option(const OracleHint& hint, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution correct(p);
  if (correct(rng)) return hint.ground_truth;
  std::uniform_int_distribution<std::size_t> pick(0, hint.options.size() - 2);
  std::size_t i = pick(rng);
  return i >= hint.ground_truth ? i + 1 : i;
}

void set_uniform_logprobs(Candidate& c, double cum) {
  c.tokens = split_tokens(c.text);
  c.token_logprobs.assign(c.tokens.size(), cum / static_cast<double>(c.tokens.size()));
  double sum = 0.0;
  for (double lp : c.token_logprobs) sum += lp;
  c.cum_logprob = sum;
}

}  // namespace

double OracleConfig::accuracy_at(TaskKind task, double temperature) const noexcept {
  const double p = accuracy[static_cast<std::size_t>(task_number(task) - 1)] + temperature_slope * temperature;
  return std::clamp(p, 0.0, 1.0);
}

void OracleConfig::validate() const {
  for (double p : accuracy) {
    if (!(p >= 0.0 && p <= 1.0)) throw RangeError("oracle accuracy must lie in [0, 1]");
  }
  if (!(verbosity >= 0.0 && verbosity <= 1.0)) throw RangeError("oracle verbosity must lie in [0, 1]");
  if (mu_correct > 0.0 || mu_wrong > 0.0) throw RangeError("oracle log-likelihood means must be <= 0");
  if (!(sigma >= 0.0)) throw RangeError("oracle sigma must be >= 0");
}

std::string oracle_answer_text(const std::string& option, bool wrapped) {
  if (!wrapped) return option;
  return "Based on what I heard, the answer is " + bracket_form(option) + ".";
}

QueryResponse simulate(const QueryRequest& request, const OracleConfig& oracle, std::uint64_t seed) {
  const auto& hint = hint_of(request);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, oracle.sigma);
  auto draw_loglik = [&](bool correct) {
    return std::min(0.0, (correct ? oracle.mu_correct : oracle.mu_wrong) + noise(rng));
  };
  const double q = effective_verbosity(request.prompt, oracle.verbosity);

  QueryResponse out;
  out.model = request.model_id;
  if (request.decode.mode == DecodeMode::Sample) {
    const double p = oracle.accuracy_at(hint.task, request.decode.temperature);
    std::bernoulli_distribution wrap(q);
    for (int n = 0; n < request.decode.num_samples; ++n) {
      const std::size_t choice = draw_option(hint, p, rng);
      Candidate c;
      c.text = oracle_answer_text(hint.options[choice], wrap(rng));
      c.temperature = request.decode.temperature;
      c.tokens = split_tokens(c.text);
      if (request.want_logprobs) set_uniform_logprobs(c, draw_loglik(choice == hint.ground_truth));
      out.candidates.push_back(std::move(c));
    }
  } else {
    // The option the model "believes" gets the high-likelihood mean.
    const std::size_t believed = draw_option(hint, oracle.accuracy_at(hint.task, 0.0), rng);
    TokenLattice lattice;
    const std::size_t root = lattice.add_state();
    for (std::size_t i = 0; i < hint.options.size(); ++i) {
      const std::string& opt = hint.options[i];
      const std::vector<std::string> forms = q >= 1.0
          ? std::vector<std::string>{oracle_answer_text(opt, true), "The answer is " + bracket_form(opt) + "."}
          : std::vector<std::string>{opt, opt + ".", "The answer is " + bracket_form(opt) + ".", "Answer: " + bracket_form(opt)};
      for (const auto& form : forms) {
        const auto tokens = split_tokens(form);
        const double cum = draw_loglik(i == believed);
        std::size_t at = root;
        for (std::size_t t = 0; t < tokens.size(); ++t) {
          const std::size_t next = lattice.add_state();
          lattice.add_arc(at, tokens[t], cum / static_cast<double>(tokens.size()), next);
          at = next;
        }
      }
    }
    const auto beams = select_top_beams(lattice, static_cast<std::size_t>(request.decode.beam_width));
    for (std::size_t r = 0; r < beams.size(); ++r) {
      Candidate c;
      for (std::size_t t = 0; t < beams[r].tokens.size(); ++t) {
        if (t > 0) c.text += ' ';
        c.text += beams[r].tokens[t];
      }
      c.tokens = beams[r].tokens;
      c.token_logprobs = beams[r].token_logprobs;
      c.cum_logprob = beams[r].cum_logprob;
      c.beam_rank = static_cast<int>(r);
      out.candidates.push_back(std::move(c));
    }
  }
  out.payload_digest = sha256_hex(response_to_wire(out).dump());
  return out;
}

SimulatedBackend::SimulatedBackend(BackendInfo info, OracleConfig oracle)
    : info_(std::move(info)), oracle_(oracle) {
  oracle_.validate();
}

QueryResponse SimulatedBackend::generate(const QueryRequest& request) {
  return simulate(request, oracle_, oracle_.seed ^ digest_seed(request_key(request)));
}

// ---------------------------------------------------------------------------

void VerifierOracleConfig::validate() const {
  if (!(detection_accuracy >= 0.0 && detection_accuracy <= 1.0)) {
    throw RangeError("verifier detection_accuracy must lie in [0, 1]");
  }
  if (!(malformed_rate >= 0.0 && malformed_rate <= 1.0)) throw RangeError("verifier malformed_rate must lie in [0, 1]");
}

SimulatedVerifierBackend::SimulatedVerifierBackend(BackendInfo info, VerifierOracleConfig config)
    : info_(std::move(info)), config_(config) {
  config_.validate();
}

QueryResponse SimulatedVerifierBackend::generate(const QueryRequest& request) {
  const auto& hint = hint_of(request);
  const std::string& prompt = request.prompt.user_text;
  static constexpr std::string_view kStart = "Machine's Response:\n";
  static constexpr std::string_view kEnd = "\n\nEvaluation Process:";
  const auto begin = prompt.find(kStart);
  const auto end = prompt.find(kEnd);
  if (begin == std::string::npos || end == std::string::npos || end < begin) {
    throw BackendError(BackendErrorKind::Rejected, "simulated verifier: prompt lacks a machine response section");
  }
  const std::string response = prompt.substr(begin + kStart.size(), end - begin - kStart.size());
  const auto canonical = canonicalize_answer(response, hint.options);
  const bool truly_correct = canonical.option == hint.ground_truth;

  std::mt19937_64 rng(config_.seed ^ digest_seed(request_key(request)));
  std::bernoulli_distribution detect(config_.detection_accuracy);
  std::bernoulli_distribution malformed(config_.malformed_rate);
  std::bernoulli_distribution high(0.5);

  QueryResponse out;
  out.model = request.model_id;
  const int n = request.decode.mode == DecodeMode::Sample ? request.decode.num_samples : 1;
  for (int i = 0; i < n; ++i) {
    Candidate c;
    c.temperature = request.decode.temperature;
    if (malformed(rng)) {
      c.text = "I think the response is fine.";
    } else {
      const bool judged_correct = detect(rng) ? truly_correct : !truly_correct;
      const bool firm = high(rng);
      const char* rating = judged_correct ? (firm ? "1.0" : "0.9") : (firm ? "0.0" : "0.1");
      std::ostringstream text;
      text << "RATING: " << rating << "\n"
           << "ANALYSIS: " << (judged_correct ? "The response matches what I heard." : "The response does not match what I heard.")
           << "\n"
           << "SELECTED OPTION: " << hint.options[hint.ground_truth];
      c.text = text.str();
    }
    c.tokens = split_tokens(c.text);
    out.candidates.push_back(std::move(c));
  }
  out.payload_digest = sha256_hex(response_to_wire(out).dump());
  return out;
}

}  // namespace ttc
