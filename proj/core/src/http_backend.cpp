#include "ttc/http_backend.hpp"

#include <cctype>
#include <cstdlib>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "ttc/digest.hpp"
#include "ttc/error.hpp"
#include "ttc/wire.hpp"

namespace ttc {

using nlohmann::json;

std::string_view to_string(HttpProtocol p) noexcept {
  return p == HttpProtocol::OpenAIChat ? "openai-chat" : "ttc-wire";
}

HttpProtocol parse_http_protocol(std::string_view text) {
  if (text == "ttc-wire") return HttpProtocol::TtcWire;
  if (text == "openai-chat") return HttpProtocol::OpenAIChat;
  throw ConfigError("unknown HTTP protocol '" + std::string(text) + "'");
}

std::string default_key_env(std::string_view backend_id) {
  std::string name = "TTC_BACKEND_";
  for (char ch : backend_id) {
    const auto u = static_cast<unsigned char>(ch);
    name += std::isalnum(u) ? static_cast<char>(std::toupper(u)) : '_';
  }
  return name + "_KEY";
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw ConfigError("backend '" + config_.info.id + "': base_url is empty");
  if (config_.protocol == HttpProtocol::OpenAIChat && (config_.info.caps.beam)) {
    throw ConfigError("backend '" + config_.info.id + "': the openai-chat protocol has no beam decoding");
  }
}

HttpBackend::~HttpBackend() = default;

std::optional<std::string> HttpBackend::api_key() const {
  const std::string var = config_.key_env.value_or(default_key_env(config_.info.id));
  if (const char* v = std::getenv(var.c_str()); v != nullptr && *v != '\0') return std::string(v);
  if (config_.require_key) {
    throw BackendError(BackendErrorKind::Auth,
                       "backend '" + config_.info.id + "': credential variable " + var + " is not set");
  }
  return std::nullopt;
}

json openai_chat_body(const QueryRequest& r) {
  if (r.decode.mode != DecodeMode::Sample) {
    throw CapabilityError("openai-chat protocol supports sampling only");
  }
  const auto& text = r.prompt.user_text;
  const std::size_t split = std::min(r.prompt.question_offset, text.size());
  json content = json::array();
  auto add_text = [&](std::string_view part) {
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    if (!part.empty()) content.push_back({{"type", "text"}, {"text", std::string(part)}});
  };
  // Instruction text, audio clip, question text.
  add_text(std::string_view(text).substr(0, split));
  content.push_back({{"type", "input_audio"}, {"input_audio", {{"data", r.audio.wav_b64}, {"format", "wav"}}}});
  add_text(std::string_view(text).substr(split));

  json messages = json::array();
  if (r.prompt.system_text) messages.push_back({{"role", "system"}, {"content", *r.prompt.system_text}});
  messages.push_back({{"role", "user"}, {"content", std::move(content)}});
  json body = {{"model", r.model_id},
               {"messages", std::move(messages)},
               {"n", r.decode.num_samples},
               {"temperature", r.decode.temperature},
               {"max_tokens", r.decode.max_tokens}};
  if (r.want_logprobs) body["logprobs"] = true;
  return body;
}

QueryResponse openai_chat_response(const json& body) {
  auto malformed = [](const std::string& what) {
    return BackendError(BackendErrorKind::Malformed, "openai-chat: " + what);
  };
  if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array()) {
    throw malformed("response has no choices array");
  }
  QueryResponse out;
  if (body.contains("model") && body["model"].is_string()) out.model = body["model"].get<std::string>();
  for (const auto& choice : body["choices"]) {
    const auto msg = choice.find("message");
    if (msg == choice.end() || !msg->contains("content") || !(*msg)["content"].is_string()) {
      throw malformed("choice without message content");
    }
    Candidate c;
    c.text = (*msg)["content"].get<std::string>();
    if (auto lp = choice.find("logprobs"); lp != choice.end() && lp->is_object() && lp->contains("content")) {
      double sum = 0.0;
      for (const auto& t : (*lp)["content"]) {
        if (!t.contains("token") || !t.contains("logprob")) throw malformed("logprob entry lacks token or logprob");
        c.tokens.push_back(t["token"].get<std::string>());
        c.token_logprobs.push_back(t["logprob"].get<double>());
        sum += c.token_logprobs.back();
      }
      c.cum_logprob = sum;
    }
    out.candidates.push_back(std::move(c));
  }
  return out;
}

QueryResponse HttpBackend::generate(const QueryRequest& request) {
  const auto key = api_key();
  const std::string& id = config_.info.id;

  std::string path;
  json body;
  if (config_.protocol == HttpProtocol::TtcWire) {
    path = "/v1/generate";
    body = request_to_wire(request);
  } else {
    path = "/v1/chat/completions";
    body = openai_chat_body(request);
  }

  std::string base = config_.base_url;
  std::string prefix;
  if (auto scheme = base.find("://"); scheme != std::string::npos) {
    if (auto slash = base.find('/', scheme + 3); slash != std::string::npos) {
      prefix = base.substr(slash);
      base.resize(slash);
    }
  }
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(base);
  const auto timeout = std::chrono::duration<double>(config_.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (key) headers.emplace("Authorization", "Bearer " + *key);

  auto res = client.Post(prefix + path, headers, body.dump(), "application/json");
  if (!res) {
    throw BackendError(BackendErrorKind::Transient,
                       "backend '" + id + "': connection failed: " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status < 200 || status >= 300) {
    const std::string msg = "backend '" + id + "': HTTP " + std::to_string(status);
    if (status == 401 || status == 403) throw BackendError(BackendErrorKind::Auth, msg);
    if (status == 429) throw BackendError(BackendErrorKind::RateLimited, msg);
    if (status == 408 || status >= 500) throw BackendError(BackendErrorKind::Transient, msg);
    throw BackendError(BackendErrorKind::Rejected, msg + ": " + res->body.substr(0, 200));
  }

  json parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) {
    throw BackendError(BackendErrorKind::Malformed, "backend '" + id + "': response is not JSON");
  }
  QueryResponse out =
      config_.protocol == HttpProtocol::TtcWire ? response_from_wire(parsed) : openai_chat_response(parsed);
  if (request.decode.mode == DecodeMode::Sample) {
    for (auto& c : out.candidates) c.temperature = request.decode.temperature;
  }
  out.payload_digest = sha256_hex(res->body);
  return out;
}

}  // namespace ttc
