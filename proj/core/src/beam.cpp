#include "ttc/beam.hpp"

#include <algorithm>
#include <cmath>

#include "ttc/error.hpp"

namespace ttc {

std::size_t TokenLattice::add_state() {
  states.emplace_back();
  return states.size() - 1;
}

void TokenLattice::add_arc(std::size_t from, std::string token, double logprob, std::size_t to) {
  states.at(from).push_back({std::move(token), logprob, to});
}

std::size_t TokenLattice::branching_factor() const noexcept {
  std::size_t b = 0;
  for (const auto& arcs : states) b = std::max(b, arcs.size());
  return b;
}

std::size_t TokenLattice::path_count() const {
  if (states.empty()) return 0;
  std::vector<std::size_t> count(states.size(), 0);
  for (std::size_t s = states.size(); s-- > 0;) {
    if (states[s].empty()) {
      count[s] = 1;
      continue;
    }
    for (const auto& arc : states[s]) count[s] += count[arc.target];
  }
  return count[0];
}

void TokenLattice::validate() const {
  if (states.empty()) throw ConfigError("token lattice has no states");
  if (states[0].empty()) throw ConfigError("token lattice start state has no outgoing arcs");
  for (std::size_t s = 0; s < states.size(); ++s) {
    for (const auto& arc : states[s]) {
      if (arc.target <= s || arc.target >= states.size()) {
        throw ConfigError("token lattice arc " + std::to_string(s) + " -> " + std::to_string(arc.target) +
                          " is dangling or points backwards");
      }
      if (!std::isfinite(arc.logprob) || arc.logprob > 0.0) {
        throw ConfigError("token lattice arc from state " + std::to_string(s) + " has invalid log-probability");
      }
    }
  }
}

bool beam_precedes(const BeamHypothesis& a, const BeamHypothesis& b) noexcept {
  if (a.cum_logprob != b.cum_logprob) return a.cum_logprob > b.cum_logprob;
  return a.tokens < b.tokens;
}

std::vector<BeamHypothesis> select_top_beams(const TokenLattice& lattice, std::size_t beam_width) {
  if (beam_width == 0) throw ConfigError("beam width must be at least 1");
  lattice.validate();

  std::vector<BeamHypothesis> frontier(1);
  std::vector<BeamHypothesis> finished;
  while (!frontier.empty()) {
    std::vector<BeamHypothesis> extensions;
    for (const auto& h : frontier) {
      for (const auto& arc : lattice.states[h.state]) {
        BeamHypothesis next = h;
        next.tokens.push_back(arc.token);
        next.token_logprobs.push_back(arc.logprob);
        next.cum_logprob += arc.logprob;
        next.state = arc.target;
        extensions.push_back(std::move(next));
      }
    }
    const std::size_t keep = std::min(beam_width, extensions.size());
    std::partial_sort(extensions.begin(), extensions.begin() + static_cast<std::ptrdiff_t>(keep), extensions.end(),
                      beam_precedes);
    extensions.resize(keep);

    frontier.clear();
    for (auto& h : extensions) {
      if (lattice.is_final(h.state)) {
        finished.push_back(std::move(h));
      } else {
        frontier.push_back(std::move(h));
      }
    }
  }
  std::sort(finished.begin(), finished.end(), beam_precedes);
  if (finished.size() > beam_width) finished.resize(beam_width);
  return finished;
}

}  // namespace ttc
