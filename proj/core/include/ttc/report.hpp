#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ttc/record.hpp"

namespace ttc {

struct AccuracyCell {
  std::size_t correct = 0;
  std::size_t count = 0;

  /// 0 for an empty cell.
  double accuracy() const noexcept { return count == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(count); }
  friend bool operator==(const AccuracyCell&, const AccuracyCell&) = default;
};

/// Column order: overall, task 1, task 2, task 3.
inline constexpr std::array<const char*, 4> kAccuracyColumns{"overall", "task1", "task2", "task3"};

struct AccuracyRow {
  std::string backend;
  std::string strategy;
  std::optional<SweepPoint> sweep;
  std::array<AccuracyCell, 4> cells{};

  friend bool operator==(const AccuracyRow&, const AccuracyRow&) = default;
};

struct AccuracyTable {
  std::vector<AccuracyRow> rows;

  const AccuracyRow* find(const std::string& backend, const std::string& strategy,
                          const std::optional<SweepPoint>& sweep = std::nullopt) const;
  friend bool operator==(const AccuracyTable&, const AccuracyTable&) = default;
};

/// Groups by (backend, strategy, sweep point). Overall is the micro average:
/// correct trials over all trials of the row. Throws ConfigError when empty.
AccuracyTable accuracy_by_task(std::span<const TrialRecord> records);

/// 100 * (treatment - baseline) / baseline, rounded half away from zero to
/// one decimal. Empty when the baseline is not positive.
std::optional<double> relative_improvement(double baseline, double treatment);

/// "(+36.2)", "(-33.2)", "(+0.00)" for no change, "(n/a)" when undefined.
std::string format_improvement(const std::optional<double>& improvement);

struct Comparison {
  std::string text;  // aligned UTF-8 table, one block per backend
  std::string csv;   // long form, one line per (row, column)
};

/// Compares every non-sweep row with the baseline strategy of the same
/// backend. Throws ConfigError when a backend lacks the baseline row.
Comparison render_comparison(const AccuracyTable& table, const std::string& baseline_strategy);

/// Reads the CSV written by render_comparison back into a table.
AccuracyTable parse_comparison_csv(const std::string& csv);

/// Rows of (backend, strategy, sweep point, task, correct, count, accuracy)
/// for records tagged with `axis`, sorted by sweep point; the task column
/// runs task1, task2, task3, overall. Throws ConfigError when no record
/// carries the axis.
std::string emit_sweep_csv(std::span<const TrialRecord> records, SweepAxis axis);

}  // namespace ttc
