#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ttc/aggregate.hpp"
#include "ttc/beam.hpp"
#include "ttc/canonical.hpp"
#include "ttc/mix.hpp"
#include "ttc/verifier.hpp"

namespace {

std::vector<ttc::Candidate> random_candidates(std::size_t n, std::size_t options, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ll(-10.0, 0.0);
  std::uniform_int_distribution<std::size_t> pick(0, options - 1);
  std::vector<ttc::Candidate> out(n);
  for (auto& c : out) {
    c.text = "x";
    c.tokens = {"x"};
    c.cum_logprob = ll(rng);
    c.token_logprobs = {*c.cum_logprob};
    c.canonical = {pick(rng), ttc::MatchRule::Exact};
  }
  return out;
}

void BM_WeightByLoglik(benchmark::State& state) {
  const auto cands = random_candidates(static_cast<std::size_t>(state.range(0)), 4, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ttc::weight_by_loglik(cands, 4));
}
BENCHMARK(BM_WeightByLoglik)->Arg(7)->Arg(64);

void BM_MajorityVote(benchmark::State& state) {
  const auto cands = random_candidates(11, 4, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ttc::majority_vote(cands, 4, ttc::TieBreak::LowestTemperature));
}
BENCHMARK(BM_MajorityVote);

ttc::TokenLattice full_tree(int branching, int depth) {
  ttc::TokenLattice lattice;
  std::vector<std::size_t> frontier{lattice.add_state()};
  const double lp = std::log(1.0 / branching);
  for (int d = 0; d < depth; ++d) {
    std::vector<std::size_t> next;
    for (auto s : frontier) {
      for (int b = 0; b < branching; ++b) {
        const auto child = lattice.add_state();
        lattice.add_arc(s, "t" + std::to_string(b), lp - 0.01 * b, child);
        next.push_back(child);
      }
    }
    frontier = std::move(next);
  }
  return lattice;
}

void BM_BeamSearch(benchmark::State& state) {
  const auto lattice = full_tree(5, 4);
  const auto width = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ttc::select_top_beams(lattice, width));
}
BENCHMARK(BM_BeamSearch)->Arg(1)->Arg(4)->Arg(7);

void BM_Canonicalize(benchmark::State& state) {
  const std::vector<std::string> options{"6,7,9", "8,9,1", "6,9,1", "8,7,9"};
  const std::string text =
      "The female speaker says 6, 7 and 9 while the male says 8, 9 and 1, so the answer is [6, 7, 9].";
  for (auto _ : state) benchmark::DoNotOptimize(ttc::canonicalize_answer(text, options));
}
BENCHMARK(BM_Canonicalize);

void BM_ParseVerifier(benchmark::State& state) {
  const std::vector<std::string> options{"6,7,9", "8,9,1", "6,9,1", "8,7,9"};
  const std::string text = "RATING: 0.8\nANALYSIS: The digits match the female speaker.\nSELECTED OPTION: 6,7,9";
  for (auto _ : state) benchmark::DoNotOptimize(ttc::parse_verifier_response(text, options));
}
BENCHMARK(BM_ParseVerifier);

void BM_MixAtSnr(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-0.3f, 0.3f);
  ttc::Waveform fg, bg;
  fg.sample_rate = bg.sample_rate = 16000;
  fg.samples.resize(16000 * 4);
  bg.samples.resize(16000);
  for (std::size_t i = 0; i < fg.samples.size(); ++i) {
    fg.samples[i] = static_cast<float>(0.4 * std::sin(0.05 * static_cast<double>(i)));
  }
  for (auto& s : bg.samples) s = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(ttc::mix_at_snr(fg, bg, 5.0));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(fg.samples.size() * sizeof(float)));
}
BENCHMARK(BM_MixAtSnr);

}  // namespace

BENCHMARK_MAIN();
