#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "ttc/gateway.hpp"

namespace ttc {

/// JSON body for POST /v1/generate:
///   {model, audio_b64, sample_rate, prompt, system?, decode:{mode, temperature,
///    n, beams, max_tokens}, want_logprobs}
nlohmann::json request_to_wire(const QueryRequest& request);

/// Inverse of request_to_wire. Backend id, request id and oracle hints are not
/// carried on the wire. Throws BackendError(Malformed) on schema violations.
QueryRequest request_from_wire(const nlohmann::json& body);

/// {candidates:[{text, tokens, token_logprobs, cum_logprob, temperature?}], model, latency_ms}
nlohmann::json response_to_wire(const QueryResponse& response);

/// Throws BackendError(Malformed) when the payload does not follow the protocol.
QueryResponse response_from_wire(const nlohmann::json& body);

}  // namespace ttc
