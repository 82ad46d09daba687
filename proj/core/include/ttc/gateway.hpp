#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ttc/audio.hpp"
#include "ttc/candidate.hpp"
#include "ttc/prompt.hpp"
#include "ttc/trial.hpp"

namespace ttc {

enum class DecodeMode { Sample, Beam };

std::string_view to_string(DecodeMode mode) noexcept;
DecodeMode parse_decode_mode(std::string_view text);

struct DecodeParams {
  DecodeMode mode = DecodeMode::Sample;
  double temperature = 0.0;  // ignored for beams
  int num_samples = 1;
  int beam_width = 1;
  int max_tokens = 128;
};

/// Audio as shipped on the wire: a base64-encoded 16-bit PCM WAV file.
struct EncodedAudio {
  std::string wav_b64;
  int sample_rate = 0;
  std::string digest;  // sha256 of the WAV bytes
};

EncodedAudio encode_audio(const Waveform& wave);

/// Ground truth a simulated backend needs to play its part. Never leaves the
/// process and never enters the cache key.
struct OracleHint {
  TaskKind task = TaskKind::Task1Event;
  std::vector<std::string> options;
  std::size_t ground_truth = 0;
};

struct QueryRequest {
  std::string backend_id;
  std::string model_id;
  EncodedAudio audio;
  PromptBundle prompt;
  DecodeParams decode;
  bool want_logprobs = false;
  std::string request_id;
  /// Deliberate re-ask counter (verifier retries). Part of the cache key so a
  /// retry is not answered from the cache with the response it is retrying.
  int attempt = 0;
  std::optional<OracleHint> oracle_hint;
};

struct QueryResponse {
  std::vector<Candidate> candidates;
  std::string model;
  double latency_ms = 0.0;
  std::string payload_digest;
};

struct Capabilities {
  bool sample = true;
  bool beam = false;
  bool logprobs = false;
  bool audio = true;

  bool sample_only() const noexcept { return !beam && !logprobs; }
};

struct TemperatureRange {
  double min = 0.0;
  double max = 2.0;
  bool max_inclusive = true;

  bool contains(double t) const noexcept {
    return t >= min && (max_inclusive ? t <= max : t < max);
  }
  std::string describe() const;
};

struct BackendLimits {
  int max_concurrency = 8;
  double requests_per_minute = 0.0;  // 0 = unlimited
  int max_beam_width = 16;
};

struct BackendInfo {
  std::string id;
  std::string model;
  Capabilities caps;
  TemperatureRange temperature;
  BackendLimits limits;
  bool verbose = false;  // needs the answer-only suffix
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual const BackendInfo& info() const = 0;
  /// Performs one dispatch. Throws BackendError on failure.
  virtual QueryResponse generate(const QueryRequest& request) = 0;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base{1000};
  double multiplier = 2.0;
  bool jitter = true;
};

/// Requests-per-minute limiter. A zero rate never blocks.
class TokenBucket {
 public:
  explicit TokenBucket(double per_minute, double burst = 0.0);
  void acquire();
  /// Non-blocking variant; returns false when no token is available.
  bool try_acquire();

 private:
  void refill(std::chrono::steady_clock::time_point now);

  double rate_per_sec_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

struct GatewayStats {
  std::uint64_t dispatched = 0;  // successful backend calls
  std::uint64_t attempts = 0;    // including failed attempts
  std::uint64_t retries = 0;
};

/// Stable digest of everything that determines a backend's answer.
std::string request_key(const QueryRequest& request);

/// Registry and dispatcher for model backends. Validates requests before
/// dispatch, enforces per-backend concurrency and rate limits, retries
/// transient failures with jittered exponential backoff and normalizes
/// responses (count, ordering, log-probability consistency).
class Gateway {
 public:
  explicit Gateway(RetryPolicy retry = {}, std::uint64_t jitter_seed = 0);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  void register_backend(std::shared_ptr<Backend> backend);
  bool has_backend(std::string_view id) const;
  const BackendInfo& info(std::string_view id) const;

  /// Throws ConfigError/CapabilityError/RangeError for requests that must
  /// not be dispatched.
  void validate_request(const QueryRequest& request) const;

  QueryResponse query(const QueryRequest& request);

  GatewayStats stats() const;

  /// Replaces the sleep used between retries (tests).
  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper);

 private:
  struct Slot;
  Slot& slot(std::string_view id) const;
  std::chrono::milliseconds backoff(int attempt);

  RetryPolicy retry_;
  std::map<std::string, std::unique_ptr<Slot>, std::less<>> backends_;
  std::function<void(std::chrono::milliseconds)> sleeper_;
  std::mutex jitter_mu_;
  std::uint64_t jitter_state_;
  std::atomic<std::uint64_t> dispatched_{0};
  std::atomic<std::uint64_t> attempts_{0};
  std::atomic<std::uint64_t> retries_{0};
};

/// Sorts beam candidates by cumulative log-probability, highest first; ties
/// are broken by lexicographic token order.
void sort_beam_candidates(std::vector<Candidate>& candidates);

}  // namespace ttc
