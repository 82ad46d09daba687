#include "ttc/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ttc/digest.hpp"
#include "ttc/error.hpp"

namespace ttc {

std::string_view to_string(DecodeMode mode) noexcept { return mode == DecodeMode::Beam ? "beam" : "sample"; }

DecodeMode parse_decode_mode(std::string_view text) {
  if (text == "sample") return DecodeMode::Sample;
  if (text == "beam") return DecodeMode::Beam;
  throw ConfigError("unknown decode mode '" + std::string(text) + "'");
}

EncodedAudio encode_audio(const Waveform& wave) {
  const auto bytes = encode_wav(wave, WavEncoding::Pcm16);
  return {base64_encode(bytes), wave.sample_rate, sha256_hex(bytes)};
}

std::string TemperatureRange::describe() const {
  std::ostringstream out;
  out << '[' << min << ", " << max << (max_inclusive ? ']' : ')');
  return out.str();
}

void validate_candidate(const Candidate& c, double tolerance) {
  if (!c.cum_logprob) return;
  if (!c.token_logprobs.empty() && c.token_logprobs.size() != c.tokens.size()) {
    throw BackendError(BackendErrorKind::Malformed, "candidate has " + std::to_string(c.tokens.size()) +
                                                        " tokens but " + std::to_string(c.token_logprobs.size()) +
                                                        " token log-probabilities");
  }
  if (!std::isfinite(*c.cum_logprob) || *c.cum_logprob > 0.0) {
    throw BackendError(BackendErrorKind::Malformed, "candidate cumulative log-probability must be finite and <= 0");
  }
  if (!c.token_logprobs.empty()) {
    const double sum = std::accumulate(c.token_logprobs.begin(), c.token_logprobs.end(), 0.0);
    if (std::fabs(sum - *c.cum_logprob) > tolerance) {
      throw BackendError(BackendErrorKind::Malformed, "candidate cumulative log-probability differs from token sum");
    }
  }
}

void sort_beam_candidates(std::vector<Candidate>& candidates) {
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    const double la = a.cum_logprob.value_or(-INFINITY);
    const double lb = b.cum_logprob.value_or(-INFINITY);
    if (la != lb) return la > lb;
    return a.tokens < b.tokens;
  });
  for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i].beam_rank = static_cast<int>(i);
}

std::string request_key(const QueryRequest& r) {
  // Fixed field order; doubles printed with full precision.
  nlohmann::json key = {
      {"backend", r.backend_id},
      {"model", r.model_id},
      {"system", r.prompt.system_text ? nlohmann::json(*r.prompt.system_text) : nlohmann::json(nullptr)},
      {"prompt", r.prompt.user_text},
      {"audio", r.audio.digest},
      {"sample_rate", r.audio.sample_rate},
      {"mode", to_string(r.decode.mode)},
      {"temperature", r.decode.mode == DecodeMode::Sample ? r.decode.temperature : 0.0},
      {"n", r.decode.mode == DecodeMode::Sample ? r.decode.num_samples : 0},
      {"beams", r.decode.mode == DecodeMode::Beam ? r.decode.beam_width : 0},
      {"max_tokens", r.decode.max_tokens},
      {"logprobs", r.want_logprobs},
      {"attempt", r.attempt},
  };
  return sha256_hex(key.dump());
}

// ---------------------------------------------------------------------------

TokenBucket::TokenBucket(double per_minute, double burst)
    : rate_per_sec_(per_minute / 60.0),
      capacity_(burst > 0 ? burst : std::max(1.0, per_minute / 60.0)),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::refill(std::chrono::steady_clock::time_point now) {
  const double elapsed = std::chrono::duration<double>(now - last_).count();
  tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_sec_);
  last_ = now;
}

bool TokenBucket::try_acquire() {
  if (rate_per_sec_ <= 0) return true;
  std::lock_guard lock(mu_);
  refill(std::chrono::steady_clock::now());
  if (tokens_ < 1.0) return false;
  tokens_ -= 1.0;
  return true;
}

void TokenBucket::acquire() {
  if (rate_per_sec_ <= 0) return;
  for (;;) {
    std::chrono::duration<double> wait{0};
    {
      std::lock_guard lock(mu_);
      refill(std::chrono::steady_clock::now());
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_sec_);
    }
    std::this_thread::sleep_for(wait);
  }
}

// ---------------------------------------------------------------------------

struct Gateway::Slot {
  explicit Slot(std::shared_ptr<Backend> b)
      : backend(std::move(b)), bucket(backend->info().limits.requests_per_minute) {}

  std::shared_ptr<Backend> backend;
  TokenBucket bucket;
  std::mutex mu;
  std::condition_variable cv;
  int in_flight = 0;
};

Gateway::Gateway(RetryPolicy retry, std::uint64_t jitter_seed)
    : retry_(retry),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      jitter_state_(jitter_seed ^ 0x2545F4914F6CDD1Dull) {}

Gateway::~Gateway() = default;

void Gateway::register_backend(std::shared_ptr<Backend> backend) {
  if (!backend) throw ConfigError("register_backend: null backend");
  const auto& id = backend->info().id;
  if (id.empty()) throw ConfigError("register_backend: backend id is empty");
  if (backends_.count(id)) throw ConfigError("backend '" + id + "' registered twice");
  backends_.emplace(id, std::make_unique<Slot>(std::move(backend)));
}

bool Gateway::has_backend(std::string_view id) const { return backends_.find(id) != backends_.end(); }

Gateway::Slot& Gateway::slot(std::string_view id) const {
  auto it = backends_.find(id);
  if (it == backends_.end()) throw ConfigError("backend '" + std::string(id) + "' is not registered");
  return *it->second;
}

const BackendInfo& Gateway::info(std::string_view id) const { return slot(id).backend->info(); }

void Gateway::validate_request(const QueryRequest& r) const {
  const auto& info = this->info(r.backend_id);
  const auto& d = r.decode;
  const std::string who = "backend '" + info.id + "'";
  if (d.max_tokens < 1) throw RangeError(who + ": max_tokens must be >= 1");
  if (d.mode == DecodeMode::Sample) {
    if (!info.caps.sample) throw CapabilityError(who + " does not support sampling");
    if (d.num_samples < 1) throw RangeError(who + ": num_samples must be >= 1");
    if (!std::isfinite(d.temperature) || !info.temperature.contains(d.temperature)) {
      std::ostringstream msg;
      msg << who << ": temperature " << d.temperature << " outside declared range " << info.temperature.describe();
      throw RangeError(msg.str());
    }
  } else {
    if (!info.caps.beam) throw CapabilityError(who + " does not support beam decoding");
    if (d.beam_width < 1) throw RangeError(who + ": beam width must be >= 1");
    if (d.beam_width > info.limits.max_beam_width) {
      throw RangeError(who + ": beam width " + std::to_string(d.beam_width) + " exceeds limit " +
                       std::to_string(info.limits.max_beam_width));
    }
  }
  if (r.want_logprobs && !info.caps.logprobs) throw CapabilityError(who + " does not expose log-probabilities");
  if (!info.caps.audio) throw CapabilityError(who + " does not accept audio input");
}

std::chrono::milliseconds Gateway::backoff(int attempt) {
  double ms = static_cast<double>(retry_.base.count()) * std::pow(retry_.multiplier, attempt - 1);
  if (retry_.jitter) {
    std::lock_guard lock(jitter_mu_);
    jitter_state_ ^= jitter_state_ << 13;
    jitter_state_ ^= jitter_state_ >> 7;
    jitter_state_ ^= jitter_state_ << 17;
    const double u = static_cast<double>(jitter_state_ >> 11) / static_cast<double>(1ull << 53);
    ms *= 0.5 + u;
  }
  return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

QueryResponse Gateway::query(const QueryRequest& request) {
  validate_request(request);
  Slot& s = slot(request.backend_id);
  const auto& info = s.backend->info();

  {
    std::unique_lock lock(s.mu);
    s.cv.wait(lock, [&] { return s.in_flight < std::max(1, info.limits.max_concurrency); });
    ++s.in_flight;
  }
  struct Release {
    Slot& s;
    ~Release() {
      {
        std::lock_guard lock(s.mu);
        --s.in_flight;
      }
      s.cv.notify_one();
    }
  } release{s};

  QueryResponse response;
  const int max_attempts = std::max(1, retry_.max_attempts);
  for (int attempt = 1;; ++attempt) {
    s.bucket.acquire();
    ++attempts_;
    const auto started = std::chrono::steady_clock::now();
    try {
      response = s.backend->generate(request);
      response.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      break;
    } catch (const BackendError& e) {
      if (!e.retryable()) throw;
      if (attempt >= max_attempts) {
        throw BackendError(e.kind(), "backend '" + info.id + "': giving up after " + std::to_string(attempt) +
                                         " attempts: " + e.what());
      }
    }
    ++retries_;
    sleeper_(backoff(attempt));
  }
  ++dispatched_;

  const auto& d = request.decode;
  for (auto& c : response.candidates) {
    if (c.cum_logprob && !c.token_logprobs.empty()) {
      // Accept float-precision sums from remote decoders, then store the exact sum.
      validate_candidate(c, 1e-4);
      c.cum_logprob = std::accumulate(c.token_logprobs.begin(), c.token_logprobs.end(), 0.0);
    }
    validate_candidate(c);
    if (request.want_logprobs && !c.cum_logprob) {
      throw BackendError(BackendErrorKind::Malformed, "backend '" + info.id + "' omitted requested log-probabilities");
    }
  }
  if (d.mode == DecodeMode::Sample) {
    if (static_cast<int>(response.candidates.size()) != d.num_samples) {
      throw BackendError(BackendErrorKind::Malformed, "backend '" + info.id + "' returned " +
                                                          std::to_string(response.candidates.size()) + " samples, expected " +
                                                          std::to_string(d.num_samples));
    }
  } else {
    if (response.candidates.empty()) {
      throw BackendError(BackendErrorKind::Malformed, "backend '" + info.id + "' returned no beams");
    }
    for (auto& c : response.candidates) c.temperature = 0.0;
    sort_beam_candidates(response.candidates);
    if (static_cast<int>(response.candidates.size()) > d.beam_width) {
      response.candidates.resize(static_cast<std::size_t>(d.beam_width));
    }
  }
  return response;
}

GatewayStats Gateway::stats() const { return {dispatched_.load(), attempts_.load(), retries_.load()}; }

void Gateway::set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleeper_ = std::move(sleeper); }

}  // namespace ttc
