#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ttc/gateway.hpp"
#include "ttc/http_backend.hpp"
#include "ttc/oracle.hpp"
#include "ttc/record.hpp"
#include "ttc/strategy.hpp"

namespace ttc {

enum class BackendKind { Simulated, SimulatedVerifier, Http };
enum class BackendRole { Subject, Verifier };

struct BackendSpec {
  BackendInfo info;
  BackendKind kind = BackendKind::Simulated;
  BackendRole role = BackendRole::Subject;
  OracleConfig oracle{};
  VerifierOracleConfig verifier{};
  HttpBackendConfig http{};
};

/// Per-strategy entry of the config: the strategy plus the subject backends
/// it runs on (all subjects when empty).
struct StrategyEntry {
  StrategyConfig config;
  std::vector<std::string> backends;
  bool fixed_beam_width = false;
  bool fixed_temperature = false;
};

struct SweepSpec {
  SweepAxis axis = SweepAxis::Beam;
  std::vector<int> beam_widths{2, 3, 4, 5, 6, 7};
  std::vector<double> temperatures = default_temperature_grid();

  std::vector<SweepPoint> points() const;
};

struct ExperimentConfig {
  std::filesystem::path source;    // the TOML file
  std::filesystem::path base_dir;  // relative paths resolve here
  std::filesystem::path trials;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> cache_dir;  // default <output_dir>/cache
  std::uint64_t seed = 0;
  int max_concurrency = 4;
  std::int64_t budget = 0;  // max backend calls; 0 = unlimited
  RetryPolicy retry{};
  std::vector<BackendSpec> backends;
  std::vector<StrategyEntry> strategies;
  std::optional<SweepSpec> sweep;

  const BackendSpec* find_backend(const std::string& id) const;
  std::vector<const BackendSpec*> subjects() const;
  /// Subject backends a strategy entry applies to.
  std::vector<const BackendSpec*> subjects_for(const StrategyEntry& entry) const;
};

/// Parses TOML text. Errors name the offending field path.
ExperimentConfig parse_config(const std::string& toml_text, const std::filesystem::path& base_dir);

/// Loads and validates; the returned config is safe to run.
ExperimentConfig validate_config(const std::filesystem::path& path);

/// Capability, range and cross-reference checks. Throws ConfigError,
/// CapabilityError or RangeError naming backend and strategy.
void check_config(const ExperimentConfig& config);

std::shared_ptr<Backend> make_backend(const BackendSpec& spec);

struct RunSummary {
  std::size_t total_cells = 0;
  std::size_t already_complete = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;
  bool budget_stop = false;
  std::uint64_t backend_calls = 0;
  std::uint64_t cache_hits = 0;
  double elapsed_s = 0.0;

  int exit_code() const noexcept { return failed > 0 || skipped > 0 || budget_stop ? 2 : 0; }
};

nlohmann::json summary_to_json(const RunSummary& summary);

struct RunOptions {
  /// Replaces backend construction (tests inject failing or counting backends).
  std::function<std::shared_ptr<Backend>(const BackendSpec&)> backend_factory;
  /// Stop after this many new records (simulates an interrupted run).
  std::optional<std::size_t> stop_after;
  /// Sleep used between gateway retries.
  std::function<void(std::chrono::milliseconds)> sleeper;
};

/// Runs every incomplete (trial, subject backend, strategy) cell.
RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Repeats BS-W cells per beam width, or no-TTC cells per temperature.
RunSummary run_sweep(const ExperimentConfig& config, SweepAxis axis, const RunOptions& options = {});

/// Re-runs the commands recorded in `run_dir` using its copied config.
RunSummary resume_run(const std::filesystem::path& run_dir, const RunOptions& options = {});

/// Reads records.jsonl, truncating a torn final line. Corrupt lines are skipped.
std::vector<TrialRecord> load_records(const std::filesystem::path& run_dir);

}  // namespace ttc
