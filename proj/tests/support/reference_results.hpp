#pragma once

#include <array>
#include <string>
#include <vector>

namespace ttc::test {

/// One printed cell of the published comparison: accuracy and the printed
/// parenthetical relative to the baseline row of the same model and column.
struct PublishedCell {
  double accuracy;
  double improvement;
};

struct PublishedRow {
  const char* model;
  const char* strategy;
  std::array<PublishedCell, 4> cells;  // overall, task 1, task 2, task 3
};

struct PublishedBaseline {
  const char* model;
  std::array<double, 4> accuracy;
};

inline const std::vector<PublishedBaseline>& published_baselines() {
  static const std::vector<PublishedBaseline> rows{
      {"qwen2-audio", {0.367, 0.500, 0.458, 0.250}},
      {"audio-flamingo-2", {0.400, 0.500, 0.333, 0.250}},
  };
  return rows;
}

inline const std::vector<PublishedRow>& published_rows() {
  static const std::vector<PublishedRow> rows{
      {"qwen2-audio", "cot", {{{0.417, 13.6}, {0.667, 33.4}, {0.458, 0.0}, {0.167, -33.2}}}},
      {"qwen2-audio", "majority", {{{0.400, 9.0}, {0.500, 0.0}, {0.583, 27.3}, {0.167, -33.2}}}},
      {"qwen2-audio", "bs-w", {{{0.500, 36.2}, {0.167, -66.6}, {0.750, 63.8}, {0.417, 66.8}}}},
      {"qwen2-audio", "llm-top1", {{{0.400, 9.0}, {0.667, 33.4}, {0.500, 9.2}, {0.167, -33.2}}}},
      {"qwen2-audio", "llm-w", {{{0.400, 9.0}, {0.667, 33.4}, {0.500, 9.2}, {0.167, -33.2}}}},
      {"audio-flamingo-2", "cot", {{{0.333, -16.8}, {0.500, 0.0}, {0.417, 25.2}, {0.208, -16.8}}}},
      {"audio-flamingo-2", "majority", {{{0.467, 16.8}, {0.500, 0.0}, {0.500, 50.2}, {0.417, 66.8}}}},
      {"audio-flamingo-2", "bs-w", {{{0.500, 25.0}, {0.500, 0.0}, {0.750, 125.2}, {0.250, 0.0}}}},
      {"audio-flamingo-2", "llm-top1", {{{0.667, 66.8}, {0.500, 0.0}, {0.833, 150.2}, {0.583, 133.2}}}},
      {"audio-flamingo-2", "llm-w", {{{0.633, 58.3}, {0.667, 33.4}, {0.667, 100.3}, {0.583, 133.2}}}},
  };
  return rows;
}

inline double published_baseline(const std::string& model, std::size_t column) {
  for (const auto& b : published_baselines()) {
    if (model == b.model) return b.accuracy[column];
  }
  return 0.0;
}

}  // namespace ttc::test
