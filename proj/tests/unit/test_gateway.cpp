#include <gtest/gtest.h>

#include <thread>

#include "test_support.hpp"
#include "ttc/error.hpp"
#include "ttc/gateway.hpp"

namespace ttc {
namespace {

QueryRequest sample_request(const std::string& backend, double temperature = 0.0, int n = 1) {
  QueryRequest r;
  r.backend_id = backend;
  r.model_id = "m";
  r.audio = encode_audio(test::tone(440, 0.05));
  r.prompt.user_text = "Did you hear it?";
  r.decode.mode = DecodeMode::Sample;
  r.decode.temperature = temperature;
  r.decode.num_samples = n;
  return r;
}

QueryResponse echo(const QueryRequest& r, int) {
  QueryResponse out;
  for (int i = 0; i < r.decode.num_samples; ++i) out.candidates.push_back(test::candidate("Yes", std::nullopt, r.decode.temperature));
  return out;
}

/// Gateway whose retry sleeps return immediately.
struct QuietGateway : Gateway {
  explicit QuietGateway(RetryPolicy retry = {}) : Gateway(retry) { set_sleeper([](std::chrono::milliseconds) {}); }
};

TEST(Gateway, TemperatureOutsideExclusiveRangeIsRejectedBeforeDispatch) {
  auto info = test::sim_info("b", {true, false, false, true});
  info.temperature = {0.0, 2.0, false};
  auto backend = std::make_shared<test::ScriptedBackend>(info, echo);
  QuietGateway g;
  g.register_backend(backend);
  EXPECT_THROW(g.query(sample_request("b", 2.0)), RangeError);
  EXPECT_NO_THROW(g.query(sample_request("b", 1.99)));
  EXPECT_EQ(backend->calls(), 1);
}

TEST(Gateway, CapabilityChecks) {
  auto backend = std::make_shared<test::ScriptedBackend>(test::sim_info("b", {true, false, false, true}), echo);
  QuietGateway g;
  g.register_backend(backend);
  auto beam = sample_request("b");
  beam.decode.mode = DecodeMode::Beam;
  beam.decode.beam_width = 3;
  EXPECT_THROW(g.query(beam), CapabilityError);
  auto lp = sample_request("b");
  lp.want_logprobs = true;
  EXPECT_THROW(g.query(lp), CapabilityError);
  EXPECT_THROW(g.query(sample_request("unknown")), ConfigError);
  EXPECT_EQ(backend->calls(), 0);
}

TEST(Gateway, BeamWidthLimit) {
  auto info = test::sim_info("b");
  info.limits.max_beam_width = 4;
  QuietGateway g;
  g.register_backend(std::make_shared<test::ScriptedBackend>(info, echo));
  auto r = sample_request("b");
  r.decode.mode = DecodeMode::Beam;
  r.decode.beam_width = 5;
  EXPECT_THROW(g.validate_request(r), RangeError);
}

TEST(Gateway, RetriesTransientFailures) {
  auto backend = std::make_shared<test::ScriptedBackend>(test::sim_info("b"), [](const QueryRequest& r, int call) {
    if (call < 2) throw BackendError(BackendErrorKind::Transient, "503");
    return echo(r, call);
  });
  std::vector<std::chrono::milliseconds> sleeps;
  Gateway g({5, std::chrono::milliseconds(100), 2.0, false});
  g.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  g.register_backend(backend);
  EXPECT_EQ(g.query(sample_request("b")).candidates.size(), 1u);
  EXPECT_EQ(backend->calls(), 3);
  ASSERT_EQ(sleeps.size(), 2u);
  EXPECT_EQ(sleeps[0].count(), 100);
  EXPECT_EQ(sleeps[1].count(), 200);
  const auto s = g.stats();
  EXPECT_EQ(s.dispatched, 1u);
  EXPECT_EQ(s.attempts, 3u);
  EXPECT_EQ(s.retries, 2u);
}

TEST(Gateway, GivesUpAfterMaxAttemptsKeepingKind) {
  auto backend = std::make_shared<test::ScriptedBackend>(test::sim_info("b"), [](const QueryRequest&, int) -> QueryResponse {
    throw BackendError(BackendErrorKind::RateLimited, "429");
  });
  QuietGateway g({3, std::chrono::milliseconds(1), 2.0, true});
  g.register_backend(backend);
  try {
    g.query(sample_request("b"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::RateLimited);
    EXPECT_NE(std::string(e.what()).find("giving up after 3 attempts"), std::string::npos);
  }
  EXPECT_EQ(backend->calls(), 3);
}

TEST(Gateway, AuthErrorsAreNotRetried) {
  auto backend = std::make_shared<test::ScriptedBackend>(test::sim_info("b"), [](const QueryRequest&, int) -> QueryResponse {
    throw BackendError(BackendErrorKind::Auth, "401");
  });
  QuietGateway g;
  g.register_backend(backend);
  EXPECT_THROW(g.query(sample_request("b")), BackendError);
  EXPECT_EQ(backend->calls(), 1);
}

TEST(Gateway, SampleCountMustMatch) {
  auto backend = std::make_shared<test::ScriptedBackend>(test::sim_info("b"), [](const QueryRequest&, int) {
    QueryResponse r;
    r.candidates.push_back(test::candidate("Yes"));
    return r;
  });
  QuietGateway g;
  g.register_backend(backend);
  try {
    g.query(sample_request("b", 0.0, 3));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::Malformed);
  }
}

TEST(Gateway, MissingRequestedLogprobsIsMalformed) {
  QuietGateway g;
  g.register_backend(std::make_shared<test::ScriptedBackend>(test::sim_info("b"), echo));
  auto r = sample_request("b");
  r.want_logprobs = true;
  EXPECT_THROW(g.query(r), BackendError);
}

TEST(Gateway, BeamsAreSortedTruncatedAndRanked) {
  auto backend = std::make_shared<test::ScriptedBackend>(test::sim_info("b"), [](const QueryRequest&, int) {
    QueryResponse r;
    r.candidates = {test::candidate("b", -2.0), test::candidate("a", -0.5), test::candidate("d", -2.0),
                    test::candidate("c", -2.0), test::candidate("e", -9.0)};
    for (auto& c : r.candidates) c.temperature = 0.7;
    return r;
  });
  QuietGateway g;
  g.register_backend(backend);
  auto req = sample_request("b");
  req.decode.mode = DecodeMode::Beam;
  req.decode.beam_width = 3;
  req.want_logprobs = true;
  const auto resp = g.query(req);
  ASSERT_EQ(resp.candidates.size(), 3u);
  EXPECT_EQ(resp.candidates[0].text, "a");
  EXPECT_EQ(resp.candidates[1].text, "b");
  EXPECT_EQ(resp.candidates[2].text, "c");
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(resp.candidates[static_cast<std::size_t>(i)].beam_rank, i);
    EXPECT_EQ(resp.candidates[static_cast<std::size_t>(i)].temperature, 0.0);
  }
}

TEST(Gateway, CumulativeLogprobMustMatchTokenSum) {
  Candidate c = test::candidate("x", -1.0);
  c.tokens = {"x", "y"};
  c.token_logprobs = {-0.5, -0.5};
  EXPECT_NO_THROW(validate_candidate(c));
  c.cum_logprob = -1.1;
  EXPECT_THROW(validate_candidate(c), BackendError);
  c.cum_logprob = 0.5;
  c.token_logprobs = {0.25, 0.25};
  EXPECT_THROW(validate_candidate(c), BackendError);
  c.token_logprobs = {-1.0};
  c.cum_logprob = -1.0;
  EXPECT_THROW(validate_candidate(c), BackendError);
}

TEST(Gateway, ConcurrencyLimitIsEnforced) {
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  auto info = test::sim_info("b");
  info.limits.max_concurrency = 2;
  auto backend = std::make_shared<test::ScriptedBackend>(info, [&](const QueryRequest& r, int call) {
    const int now = ++active;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    --active;
    return echo(r, call);
  });
  QuietGateway g;
  g.register_backend(backend);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { g.query(sample_request("b")); });
  for (auto& t : threads) t.join();
  EXPECT_EQ(backend->calls(), 8);
  EXPECT_LE(peak.load(), 2);
  EXPECT_GE(peak.load(), 1);
}

TEST(TokenBucket, ZeroRateNeverBlocks) {
  TokenBucket unlimited(0.0);
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(unlimited.try_acquire());
}

TEST(TokenBucket, BurstThenEmpty) {
  TokenBucket bucket(60.0, 3.0);
  EXPECT_TRUE(bucket.try_acquire());
  EXPECT_TRUE(bucket.try_acquire());
  EXPECT_TRUE(bucket.try_acquire());
  EXPECT_FALSE(bucket.try_acquire());
}

TEST(RequestKey, SensitiveToDecodingAndAudio) {
  const auto base = sample_request("b", 0.4);
  auto hotter = base;
  hotter.decode.temperature = 0.6;
  auto other_audio = base;
  other_audio.audio = encode_audio(test::tone(441, 0.05));
  auto retry = base;
  retry.attempt = 1;
  auto relabeled = base;
  relabeled.request_id = "different";
  EXPECT_EQ(request_key(base), request_key(base));
  EXPECT_NE(request_key(base), request_key(hotter));
  EXPECT_NE(request_key(base), request_key(other_audio));
  EXPECT_NE(request_key(base), request_key(retry));
  EXPECT_EQ(request_key(base), request_key(relabeled));
}

TEST(DecodeMode, Names) {
  EXPECT_EQ(parse_decode_mode("beam"), DecodeMode::Beam);
  EXPECT_EQ(to_string(DecodeMode::Sample), "sample");
  EXPECT_THROW(parse_decode_mode("greedy"), ConfigError);
}

}  // namespace
}  // namespace ttc
