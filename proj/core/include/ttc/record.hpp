#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttc/strategy.hpp"

namespace ttc {

inline constexpr const char* kRecordSchema = "ttc.record/1";

enum class SweepAxis { Beam, Temperature };
std::string_view to_string(SweepAxis axis) noexcept;
SweepAxis parse_sweep_axis(std::string_view text);

struct SweepPoint {
  SweepAxis axis = SweepAxis::Beam;
  double value = 0.0;

  /// "beam=3", "temperature=0.4"
  std::string label() const;
  friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

/// Identity of a cell: trial|backend|strategy|sweep-label.
std::string record_key(const std::string& trial_id, const std::string& backend, const std::string& strategy,
                       const std::optional<SweepPoint>& sweep);

/// One completed (trial, backend, strategy, sweep point) cell.
struct TrialRecord {
  std::string trial_id;
  TaskKind task = TaskKind::Task1Event;
  std::string backend;
  std::string model;
  std::string strategy;
  StrategyKind strategy_kind = StrategyKind::Direct;
  std::optional<SweepPoint> sweep;
  std::vector<std::string> options;
  std::size_t ground_truth = 0;
  StrategyRun run;
  bool correct = false;
  std::string started_at;
  std::string finished_at;

  std::string key() const { return record_key(trial_id, backend, strategy, sweep); }
};

nlohmann::json record_to_json(const TrialRecord& record);
/// Throws ConfigError when `doc` does not validate.
TrialRecord record_from_json(const nlohmann::json& doc);

/// Structural check against the published record schema. Returns one message
/// per violation, each prefixed with the JSON path.
std::vector<std::string> validate_record_json(const nlohmann::json& doc);

/// Current UTC time, ISO 8601 with milliseconds.
std::string utc_timestamp();

}  // namespace ttc
