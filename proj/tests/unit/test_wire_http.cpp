#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "test_support.hpp"
#include "ttc/error.hpp"
#include "ttc/http_backend.hpp"
#include "ttc/wire.hpp"

namespace ttc {
namespace {

using nlohmann::json;

json fixture(const std::string& name) {
  return json::parse(test::read_file(std::filesystem::path(TTC_TEST_FIXTURES) / "wire" / name));
}

TEST(Wire, RequestGoldenFixturesRoundTrip) {
  for (const char* name : {"request_sample.json", "request_beam.json"}) {
    const auto golden = fixture(name);
    const auto request = request_from_wire(golden);
    EXPECT_EQ(request_to_wire(request), golden) << name;
  }
  const auto beam = request_from_wire(fixture("request_beam.json"));
  EXPECT_EQ(beam.decode.mode, DecodeMode::Beam);
  EXPECT_EQ(beam.decode.beam_width, 3);
  EXPECT_TRUE(beam.want_logprobs);
  EXPECT_EQ(beam.prompt.system_text, "You are a helpful assistant.");
}

TEST(Wire, BeamResponseFixtureConforms) {
  const auto r = response_from_wire(fixture("response_beam.json"));
  ASSERT_EQ(r.candidates.size(), 3u);
  EXPECT_EQ(r.model, "qwen2-audio-7b-instruct");
  EXPECT_DOUBLE_EQ(r.latency_ms, 412.5);
  std::set<std::string> texts;
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    const auto& c = r.candidates[i];
    EXPECT_NO_THROW(validate_candidate(c, 1e-4));
    texts.insert(c.text);
    if (i > 0) EXPECT_GE(*r.candidates[i - 1].cum_logprob, *c.cum_logprob);
  }
  EXPECT_EQ(texts.size(), 3u);
  EXPECT_EQ(response_to_wire(r), fixture("response_beam.json"));
}

TEST(Wire, SampleResponseWithoutLogprobs) {
  const auto r = response_from_wire(fixture("response_sample.json"));
  ASSERT_EQ(r.candidates.size(), 3u);
  EXPECT_FALSE(r.candidates[0].has_logprobs());
  EXPECT_DOUBLE_EQ(r.candidates[2].temperature, 0.4);
}

TEST(Wire, MalformedPayloads) {
  auto expect_malformed = [](const json& body, bool request) {
    try {
      if (request) {
        request_from_wire(body);
      } else {
        response_from_wire(body);
      }
      ADD_FAILURE() << body.dump();
    } catch (const BackendError& e) {
      EXPECT_EQ(e.kind(), BackendErrorKind::Malformed);
    }
  };
  expect_malformed(fixture("response_bad.json"), false);
  expect_malformed(json::array(), false);
  expect_malformed(json{{"candidates", 3}}, false);
  auto req = fixture("request_sample.json");
  req["decode"]["mode"] = "greedy";
  expect_malformed(req, true);
  req = fixture("request_sample.json");
  req.erase("prompt");
  expect_malformed(req, true);
  req = fixture("request_sample.json");
  req["sample_rate"] = "fast";
  expect_malformed(req, true);
}

TEST(OpenAIChat, BodyPlacesAudioBetweenInstructionAndQuestion) {
  QueryRequest r = request_from_wire(fixture("request_sample.json"));
  r.prompt.question_offset = std::string("Focus on ANIMAL sound. ").size();
  r.want_logprobs = true;
  const auto body = openai_chat_body(r);
  const auto& content = body["messages"][0]["content"];
  ASSERT_EQ(content.size(), 3u);
  EXPECT_EQ(content[0]["text"], "Focus on ANIMAL sound.");
  EXPECT_EQ(content[1]["type"], "input_audio");
  EXPECT_EQ(content[1]["input_audio"]["format"], "wav");
  EXPECT_TRUE(content[2]["text"].get<std::string>().starts_with("Did you hear the cat meowing?"));
  EXPECT_EQ(body["n"], 3);
  EXPECT_EQ(body["logprobs"], true);

  r.decode.mode = DecodeMode::Beam;
  EXPECT_THROW(openai_chat_body(r), CapabilityError);
}

TEST(OpenAIChat, ResponseParsesLogprobs) {
  const json body = {{"model", "gpt-4o-audio"},
                     {"choices",
                      {{{"message", {{"content", "Yes"}}},
                        {"logprobs", {{"content", {{{"token", "Yes"}, {"logprob", -0.25}}}}}}}}}};
  const auto r = openai_chat_response(body);
  ASSERT_EQ(r.candidates.size(), 1u);
  EXPECT_EQ(r.candidates[0].text, "Yes");
  EXPECT_DOUBLE_EQ(*r.candidates[0].cum_logprob, -0.25);
  EXPECT_THROW(openai_chat_response(json{{"choices", {{{"nope", 1}}}}}), BackendError);
}

TEST(HttpBackend, KeyEnvironmentName) {
  EXPECT_EQ(default_key_env("qwen2-audio"), "TTC_BACKEND_QWEN2_AUDIO_KEY");
  EXPECT_EQ(parse_http_protocol("openai-chat"), HttpProtocol::OpenAIChat);
  EXPECT_THROW(parse_http_protocol("grpc"), ConfigError);
}

/// In-process server answering POST /api/v1/generate with a scripted status.
class WireServer {
 public:
  WireServer() {
    server_.Post("/api/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      ++hits;
      if (status != 200) {
        res.status = status;
        res.set_content("{\"error\": \"scripted\"}", "application/json");
        return;
      }
      if (garbage) {
        res.set_content("not json", "text/plain");
        return;
      }
      const auto request = request_from_wire(json::parse(req.body));
      QueryResponse out;
      out.model = request.model_id;
      for (int i = 0; i < request.decode.num_samples; ++i) out.candidates.push_back(test::candidate("Yes"));
      res.set_content(response_to_wire(out).dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~WireServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/api"; }

  int status = 200;
  bool garbage = false;
  std::atomic<int> hits{0};
  std::string last_body;
  std::string last_auth;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

HttpBackendConfig config_for(const WireServer& server, bool require_key = true) {
  HttpBackendConfig c;
  c.info = test::sim_info("wire-test", {true, false, false, true});
  c.base_url = server.url();
  c.key_env = "TTC_TEST_WIRE_KEY";
  c.require_key = require_key;
  c.timeout_s = 5;
  return c;
}

QueryRequest request(int n = 2) {
  auto r = request_from_wire(fixture("request_sample.json"));
  r.backend_id = "wire-test";
  r.decode.num_samples = n;
  return r;
}

TEST(HttpBackend, SuccessfulRoundTrip) {
  WireServer server;
  ::setenv("TTC_TEST_WIRE_KEY", "secret", 1);
  HttpBackend backend(config_for(server));
  const auto r = backend.generate(request(2));
  ASSERT_EQ(r.candidates.size(), 2u);
  EXPECT_DOUBLE_EQ(r.candidates[0].temperature, 0.4);
  EXPECT_EQ(server.last_auth, "Bearer secret");
  EXPECT_EQ(json::parse(server.last_body), request_to_wire(request(2)));
  EXPECT_EQ(r.payload_digest.size(), 64u);
}

TEST(HttpBackend, MissingKeyFailsBeforeDispatch) {
  WireServer server;
  ::unsetenv("TTC_TEST_WIRE_KEY");
  HttpBackend backend(config_for(server));
  try {
    backend.generate(request());
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::Auth);
    EXPECT_NE(std::string(e.what()).find("TTC_TEST_WIRE_KEY"), std::string::npos);
  }
  EXPECT_EQ(server.hits.load(), 0);

  HttpBackend anonymous(config_for(server, false));
  EXPECT_NO_THROW(anonymous.generate(request()));
  EXPECT_EQ(server.last_auth, "");
}

TEST(HttpBackend, StatusCodesMapToErrorKinds) {
  WireServer server;
  HttpBackend backend(config_for(server, false));
  const std::pair<int, BackendErrorKind> cases[] = {
      {401, BackendErrorKind::Auth},      {403, BackendErrorKind::Auth},      {429, BackendErrorKind::RateLimited},
      {408, BackendErrorKind::Transient}, {503, BackendErrorKind::Transient}, {400, BackendErrorKind::Rejected},
  };
  for (auto [status, kind] : cases) {
    server.status = status;
    try {
      backend.generate(request());
      ADD_FAILURE() << status;
    } catch (const BackendError& e) {
      EXPECT_EQ(e.kind(), kind) << status;
    }
  }
  server.status = 200;
  server.garbage = true;
  try {
    backend.generate(request());
    ADD_FAILURE();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::Malformed);
  }
}

TEST(HttpBackend, ConnectionFailureIsTransient) {
  HttpBackendConfig c;
  c.info = test::sim_info("down", {true, false, false, true});
  c.base_url = "http://127.0.0.1:1";
  c.require_key = false;
  c.timeout_s = 2;
  HttpBackend backend(c);
  try {
    backend.generate(request());
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::Transient);
  }
}

TEST(HttpBackend, GatewayRetriesThroughHttp) {
  WireServer server;
  server.status = 503;
  Gateway g({3, std::chrono::milliseconds(1), 2.0, false});
  g.set_sleeper([](std::chrono::milliseconds) {});
  g.register_backend(std::make_shared<HttpBackend>(config_for(server, false)));
  EXPECT_THROW(g.query(request()), BackendError);
  EXPECT_EQ(server.hits.load(), 3);
}

}  // namespace
}  // namespace ttc
