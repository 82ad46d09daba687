#include "ttc/wire.hpp"

#include "ttc/error.hpp"

namespace ttc {
namespace {

using nlohmann::json;

[[noreturn]] void malformed(const std::string& what) {
  throw BackendError(BackendErrorKind::Malformed, "wire: " + what);
}

const json& field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed(std::string("missing field '") + key + "'");
  return *it;
}

template <class T>
T get_as(const json& obj, const char* key) {
  try {
    return field(obj, key).get<T>();
  } catch (const json::exception&) {
    malformed(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

json request_to_wire(const QueryRequest& r) {
  json body = {
      {"model", r.model_id},
      {"audio_b64", r.audio.wav_b64},
      {"sample_rate", r.audio.sample_rate},
      {"prompt", r.prompt.user_text},
      {"decode",
       {{"mode", to_string(r.decode.mode)},
        {"temperature", r.decode.temperature},
        {"n", r.decode.num_samples},
        {"beams", r.decode.beam_width},
        {"max_tokens", r.decode.max_tokens}}},
      {"want_logprobs", r.want_logprobs},
  };
  if (r.prompt.system_text) body["system"] = *r.prompt.system_text;
  return body;
}

QueryRequest request_from_wire(const json& body) {
  if (!body.is_object()) malformed("request is not an object");
  QueryRequest r;
  r.model_id = get_as<std::string>(body, "model");
  r.audio.wav_b64 = get_as<std::string>(body, "audio_b64");
  r.audio.sample_rate = get_as<int>(body, "sample_rate");
  r.prompt.user_text = get_as<std::string>(body, "prompt");
  if (auto it = body.find("system"); it != body.end() && !it->is_null()) {
    if (!it->is_string()) malformed("field 'system' has the wrong type");
    r.prompt.system_text = it->get<std::string>();
  }
  const auto& d = field(body, "decode");
  if (!d.is_object()) malformed("field 'decode' is not an object");
  try {
    r.decode.mode = parse_decode_mode(get_as<std::string>(d, "mode"));
  } catch (const ConfigError& e) {
    malformed(e.what());
  }
  if (d.contains("temperature")) r.decode.temperature = get_as<double>(d, "temperature");
  if (d.contains("n")) r.decode.num_samples = get_as<int>(d, "n");
  if (d.contains("beams")) r.decode.beam_width = get_as<int>(d, "beams");
  if (d.contains("max_tokens")) r.decode.max_tokens = get_as<int>(d, "max_tokens");
  if (body.contains("want_logprobs")) r.want_logprobs = get_as<bool>(body, "want_logprobs");
  return r;
}

json response_to_wire(const QueryResponse& response) {
  json candidates = json::array();
  for (const auto& c : response.candidates) {
    json item = {{"text", c.text}, {"tokens", c.tokens}, {"token_logprobs", c.token_logprobs}};
    item["cum_logprob"] = c.cum_logprob ? json(*c.cum_logprob) : json(nullptr);
    item["temperature"] = c.temperature;
    candidates.push_back(std::move(item));
  }
  return {{"candidates", std::move(candidates)}, {"model", response.model}, {"latency_ms", response.latency_ms}};
}

QueryResponse response_from_wire(const json& body) {
  if (!body.is_object()) malformed("response is not an object");
  const auto& list = field(body, "candidates");
  if (!list.is_array()) malformed("field 'candidates' is not an array");
  QueryResponse out;
  if (auto it = body.find("model"); it != body.end() && it->is_string()) out.model = it->get<std::string>();
  if (auto it = body.find("latency_ms"); it != body.end() && it->is_number()) out.latency_ms = it->get<double>();
  for (const auto& item : list) {
    if (!item.is_object()) malformed("candidate is not an object");
    Candidate c;
    c.text = get_as<std::string>(item, "text");
    if (item.contains("tokens")) c.tokens = get_as<std::vector<std::string>>(item, "tokens");
    if (item.contains("token_logprobs") && !item["token_logprobs"].is_null()) {
      c.token_logprobs = get_as<std::vector<double>>(item, "token_logprobs");
    }
    if (auto it = item.find("cum_logprob"); it != item.end() && !it->is_null()) {
      if (!it->is_number()) malformed("field 'cum_logprob' has the wrong type");
      c.cum_logprob = it->get<double>();
    }
    if (auto it = item.find("temperature"); it != item.end() && it->is_number()) c.temperature = it->get<double>();
    out.candidates.push_back(std::move(c));
  }
  return out;
}

}  // namespace ttc
