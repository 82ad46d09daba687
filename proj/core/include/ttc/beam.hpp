#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ttc {

struct LatticeArc {
  std::string token;
  double logprob = 0.0;  // log P(token | prefix)
  std::size_t target = 0;
};

/// Finite acyclic token graph. State 0 is the start; a state without
/// outgoing arcs is final. Arcs must point to a higher-numbered state, which
/// keeps the graph acyclic by construction.
struct TokenLattice {
  std::vector<std::vector<LatticeArc>> states;

  std::size_t add_state();
  void add_arc(std::size_t from, std::string token, double logprob, std::size_t to);

  bool is_final(std::size_t state) const { return states.at(state).empty(); }
  std::size_t branching_factor() const noexcept;
  /// Number of complete start-to-final paths.
  std::size_t path_count() const;
  /// Throws ConfigError on dangling or backward arcs and non-finite or
  /// positive log-probabilities.
  void validate() const;
};

struct BeamHypothesis {
  std::vector<std::string> tokens;
  std::vector<double> token_logprobs;
  double cum_logprob = 0.0;
  std::size_t state = 0;
};

/// Ordering used for ranking: higher cum_logprob first, then lexicographic tokens.
bool beam_precedes(const BeamHypothesis& a, const BeamHypothesis& b) noexcept;

/// Width-B beam search. At every step all one-token extensions of the live
/// prefixes are ranked and the best B are kept; extensions that reach a final
/// state leave the frontier. Returns up to B complete hypotheses, best first.
/// Throws ConfigError when beam_width is 0 or the lattice is invalid.
std::vector<BeamHypothesis> select_top_beams(const TokenLattice& lattice, std::size_t beam_width);

}  // namespace ttc
