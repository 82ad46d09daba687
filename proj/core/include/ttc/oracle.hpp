#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "ttc/gateway.hpp"

namespace ttc {

/// Behaviour of the simulated subject model.
struct OracleConfig {
  /// Probability of emitting the correct option at temperature 0, per task.
  std::array<double, 3> accuracy{0.8, 0.6, 0.4};
  /// Change in accuracy per unit of temperature (negative: hotter is worse).
  double temperature_slope = 0.0;
  /// Probability q of wrapping the answer in a sentence.
  double verbosity = 0.0;
  /// Sequence log-likelihood model for beams and logprob-bearing samples.
  double mu_correct = -1.0;
  double mu_wrong = -3.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;

  /// Clamped to [0, 1].
  double accuracy_at(TaskKind task, double temperature) const noexcept;
  /// Throws RangeError when a probability leaves [0, 1] or a mean is positive.
  void validate() const;
};

/// Text the oracle emits for an option: the bare option, or a one-sentence
/// wrapper that needs Embedded or BracketList canonicalization.
std::string oracle_answer_text(const std::string& option, bool wrapped);

/// Deterministic simulated response for `request`, which must carry an
/// OracleHint. Sample mode draws N independent candidates; beam mode draws a
/// likelihood for a pool of surface forms per option and runs width-B beam
/// search over them.
QueryResponse simulate(const QueryRequest& request, const OracleConfig& oracle, std::uint64_t seed);

class SimulatedBackend : public Backend {
 public:
  SimulatedBackend(BackendInfo info, OracleConfig oracle);

  const BackendInfo& info() const override { return info_; }
  QueryResponse generate(const QueryRequest& request) override;

 private:
  BackendInfo info_;
  OracleConfig oracle_;
};

struct VerifierOracleConfig {
  /// Probability that the judged correctness of a response matches the truth.
  double detection_accuracy = 1.0;
  /// Probability of an answer without a RATING line.
  double malformed_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Simulated judge. Reads the machine response back out of the verifier
/// prompt, decides whether it names the correct option and answers in the
/// RATING / ANALYSIS / SELECTED OPTION format.
class SimulatedVerifierBackend : public Backend {
 public:
  SimulatedVerifierBackend(BackendInfo info, VerifierOracleConfig config);

  const BackendInfo& info() const override { return info_; }
  QueryResponse generate(const QueryRequest& request) override;

 private:
  BackendInfo info_;
  VerifierOracleConfig config_;
};

}  // namespace ttc
