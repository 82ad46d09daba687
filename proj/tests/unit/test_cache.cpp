#include <gtest/gtest.h>

#include <thread>

#include "test_support.hpp"
#include "ttc/cache.hpp"
#include "ttc/digest.hpp"
#include "ttc/error.hpp"
#include "ttc/oracle.hpp"

namespace ttc {
namespace {

struct Fixture {
  test::TempDir dir;
  std::shared_ptr<test::ScriptedBackend> backend;
  Gateway gateway;
  std::vector<std::string> warnings;
  ResponseCache cache;
  Dispatcher dispatcher;

  Fixture()
      : backend(std::make_shared<test::ScriptedBackend>(test::sim_info("sim"),
                                                        [](const QueryRequest& r, int) {
                                                          return simulate(r, OracleConfig{}, digest_seed(request_key(r)));
                                                        })),
        cache(dir.path(), [this](const std::string& w) { warnings.push_back(w); }),
        dispatcher(gateway, &cache) {
    gateway.register_backend(backend);
  }
};

QueryRequest request(double temperature = 0.4, double tone_hz = 440) {
  QueryRequest r;
  r.backend_id = "sim";
  r.model_id = "sim";
  r.audio = encode_audio(test::tone(tone_hz, 0.05));
  r.prompt.user_text = "Did you hear it?";
  r.decode.temperature = temperature;
  r.decode.num_samples = 3;
  r.want_logprobs = true;
  r.oracle_hint = OracleHint{TaskKind::Task1Event, {"Yes", "No"}, 0};
  return r;
}

TEST(Cache, SecondIdenticalRequestIsServedLocally) {
  Fixture f;
  const auto first = f.dispatcher.dispatch(request());
  const auto second = f.dispatcher.dispatch(request());
  EXPECT_FALSE(first.cache_hit);
  EXPECT_TRUE(second.cache_hit);
  EXPECT_EQ(f.backend->calls(), 1);
  ASSERT_EQ(second.response.candidates.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(second.response.candidates[i].text, first.response.candidates[i].text);
    EXPECT_EQ(second.response.candidates[i].cum_logprob, first.response.candidates[i].cum_logprob);
  }
  EXPECT_EQ(second.response.payload_digest, first.response.payload_digest);
}

TEST(Cache, PersistsAcrossInstances) {
  test::TempDir dir;
  auto backend = std::make_shared<test::ScriptedBackend>(test::sim_info("sim"), [](const QueryRequest& r, int) {
    return simulate(r, OracleConfig{}, 1);
  });
  Gateway g;
  g.register_backend(backend);
  {
    ResponseCache cache(dir.path());
    cached_query(request(), g, cache);
  }
  ResponseCache reopened(dir.path());
  EXPECT_EQ(reopened.size("sim"), 1u);
  cached_query(request(), g, reopened);
  EXPECT_EQ(backend->calls(), 1);
}

TEST(Cache, DistinctTemperatureOrAudioMissesCache) {
  Fixture f;
  f.dispatcher.dispatch(request(0.4));
  f.dispatcher.dispatch(request(0.6));
  f.dispatcher.dispatch(request(0.4, 880));
  EXPECT_EQ(f.backend->calls(), 3);
  EXPECT_EQ(f.cache.size("sim"), 3u);
}

TEST(Cache, InvalidRequestsNeverReachCacheOrBackend) {
  Fixture f;
  auto bad = request();
  bad.decode.temperature = 5.0;
  EXPECT_THROW(f.dispatcher.dispatch(bad), RangeError);
  EXPECT_EQ(f.backend->calls(), 0);
  EXPECT_FALSE(std::filesystem::exists(f.cache.file_for("sim")));
}

TEST(Cache, CorruptLinesAreWarnedAndMissed) {
  test::TempDir dir;
  std::string good;
  {
    ResponseCache seed(dir.path());
    QueryResponse r;
    r.candidates.push_back(test::candidate("Yes", -0.5));
    seed.store("sim", "k1", r);
    good = test::read_file(seed.file_for("sim"));
  }
  test::write_file(dir / "sim.jsonl", "{\"key\": \"k0\", \"respo\n" + good + "garbage line\n");
  std::vector<std::string> warnings;
  ResponseCache cache(dir.path(), [&](const std::string& w) { warnings.push_back(w); });
  EXPECT_FALSE(cache.lookup("sim", "k0").has_value());
  EXPECT_TRUE(cache.lookup("sim", "k1").has_value());
  EXPECT_EQ(cache.warnings(), 2u);
  EXPECT_EQ(warnings.size(), 2u);
}

TEST(Cache, AppendAfterTornTailStartsNewLine) {
  test::TempDir dir;
  test::write_file(dir / "sim.jsonl", "{\"key\": \"torn\"");
  ResponseCache cache(dir.path(), [](const std::string&) {});
  QueryResponse r;
  r.candidates.push_back(test::candidate("No"));
  cache.store("sim", "k2", r);
  ResponseCache reopened(dir.path(), [](const std::string&) {});
  EXPECT_TRUE(reopened.lookup("sim", "k2").has_value());
  EXPECT_EQ(test::read_lines(dir / "sim.jsonl").size(), 2u);
}

TEST(Cache, BeamRankSurvivesRoundTrip) {
  test::TempDir dir;
  QueryResponse r;
  r.candidates = {test::candidate("a", -0.1), test::candidate("b", -0.2)};
  r.candidates[0].beam_rank = 0;
  r.candidates[1].beam_rank = 1;
  r.payload_digest = "abc";
  {
    ResponseCache cache(dir.path());
    cache.store("beam/backend", "k", r);
  }
  ResponseCache cache(dir.path());
  const auto hit = cache.lookup("beam/backend", "k");
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(hit->candidates[1].beam_rank, 1);
  EXPECT_EQ(hit->payload_digest, "abc");
  EXPECT_EQ(cache.file_for("beam/backend").filename(), "beam_backend.jsonl");
}

TEST(Cache, ConcurrentStoresAreAllPersisted) {
  test::TempDir dir;
  {
    ResponseCache cache(dir.path());
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&, t] {
        for (int i = 0; i < 25; ++i) {
          QueryResponse r;
          r.candidates.push_back(test::candidate("x"));
          cache.store("sim", std::to_string(t) + "-" + std::to_string(i), r);
          cache.lookup("sim", "0-0");
        }
      });
    }
    for (auto& th : threads) th.join();
  }
  ResponseCache reopened(dir.path());
  EXPECT_EQ(reopened.size("sim"), 200u);
  EXPECT_EQ(reopened.warnings(), 0u);
}

}  // namespace
}  // namespace ttc
