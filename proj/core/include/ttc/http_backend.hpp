#pragma once

#include <memory>
#include <optional>
#include <string>

#include "ttc/gateway.hpp"

namespace ttc {

enum class HttpProtocol {
  TtcWire,     // POST {base}/v1/generate with the native JSON body
  OpenAIChat,  // POST {base}/v1/chat/completions with an input_audio part
};

std::string_view to_string(HttpProtocol p) noexcept;
HttpProtocol parse_http_protocol(std::string_view text);

struct HttpBackendConfig {
  BackendInfo info;
  std::string base_url;  // scheme://host[:port][/prefix]
  HttpProtocol protocol = HttpProtocol::TtcWire;
  /// Environment variable holding the API key; defaults to
  /// TTC_BACKEND_<ID>_KEY with the id upper-cased and non-alphanumerics as '_'.
  std::optional<std::string> key_env;
  bool require_key = true;
  double timeout_s = 120.0;
};

std::string default_key_env(std::string_view backend_id);

/// Backend reached over HTTP. Status codes map onto BackendErrorKind:
/// 401/403 Auth, 429 RateLimited, 408/5xx and connection failures Transient,
/// any other non-2xx Rejected; unparseable bodies are Malformed.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;

  const BackendInfo& info() const override { return config_.info; }
  QueryResponse generate(const QueryRequest& request) override;

 private:
  std::optional<std::string> api_key() const;

  HttpBackendConfig config_;
};

/// Body sent by the OpenAI-compatible protocol; exposed for tests.
nlohmann::json openai_chat_body(const QueryRequest& request);
QueryResponse openai_chat_response(const nlohmann::json& body);

}  // namespace ttc
