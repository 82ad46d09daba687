#include "ttc/cache.hpp"

#include <cctype>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "ttc/error.hpp"
#include "ttc/wire.hpp"

namespace ttc {

using nlohmann::json;

ResponseCache::ResponseCache(std::filesystem::path dir, WarningSink warn)
    : dir_(std::move(dir)), warn_(std::move(warn)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::filesystem::path ResponseCache::file_for(const std::string& backend_id) const {
  std::string name;
  for (char c : backend_id) name += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return dir_ / (name + ".jsonl");
}

void ResponseCache::warn(const std::string& message) {
  ++warnings_;
  if (warn_) {
    warn_(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

ResponseCache::Shard& ResponseCache::shard_locked(const std::string& backend_id) {
  Shard& shard = shards_[backend_id];
  if (shard.loaded) return shard;
  shard.loaded = true;
  std::ifstream in(file_for(backend_id));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json doc = json::parse(line, nullptr, false);
    try {
      if (doc.is_discarded() || !doc.contains("key") || !doc.contains("response")) throw Error("not a cache entry");
      QueryResponse response = response_from_wire(doc["response"]);
      if (doc["response"].contains("payload_digest")) {
        response.payload_digest = doc["response"]["payload_digest"].get<std::string>();
      }
      for (std::size_t i = 0; i < response.candidates.size(); ++i) {
        const auto& c = doc["response"]["candidates"][i];
        if (c.contains("beam_rank")) response.candidates[i].beam_rank = c["beam_rank"].get<int>();
      }
      shard.entries.insert_or_assign(doc["key"].get<std::string>(), std::move(response));
    } catch (const std::exception&) {
      warn("ignoring corrupt cache line " + std::to_string(lineno) + " in " + file_for(backend_id).string());
    }
  }
  return shard;
}

std::optional<QueryResponse> ResponseCache::lookup(const std::string& backend_id, const std::string& key) {
  {
    std::shared_lock lock(map_mu_);
    auto it = shards_.find(backend_id);
    if (it != shards_.end() && it->second.loaded) {
      auto hit = it->second.entries.find(key);
      if (hit == it->second.entries.end()) return std::nullopt;
      return hit->second;
    }
  }
  std::unique_lock lock(map_mu_);
  Shard& shard = shard_locked(backend_id);
  auto hit = shard.entries.find(key);
  if (hit == shard.entries.end()) return std::nullopt;
  return hit->second;
}

void ResponseCache::store(const std::string& backend_id, const std::string& key, const QueryResponse& response) {
  json wire = response_to_wire(response);
  wire["payload_digest"] = response.payload_digest;
  for (std::size_t i = 0; i < response.candidates.size(); ++i) {
    wire["candidates"][i]["beam_rank"] = response.candidates[i].beam_rank;
  }
  const std::string line = json{{"key", key}, {"response", std::move(wire)}}.dump() + "\n";

  std::lock_guard append(append_mu_);
  {
    std::unique_lock lock(map_mu_);
    shard_locked(backend_id).entries.insert_or_assign(key, response);
  }
  const auto path = file_for(backend_id);
  bool needs_newline = false;
  {
    std::ifstream probe(path, std::ios::binary | std::ios::ate);
    if (probe && probe.tellg() > 0) {
      probe.seekg(-1, std::ios::end);
      needs_newline = probe.get() != '\n';
    }
  }
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot append to cache file " + path.string());
  if (needs_newline) out << '\n';
  out << line;
  out.flush();
  if (!out) throw IoError("write to cache file " + path.string() + " failed");
}

std::size_t ResponseCache::size(const std::string& backend_id) {
  std::unique_lock lock(map_mu_);
  return shard_locked(backend_id).entries.size();
}

DispatchResult Dispatcher::dispatch(const QueryRequest& request) {
  gateway_.validate_request(request);
  if (cache_ == nullptr) return {gateway_.query(request), false};
  const std::string key = request_key(request);
  if (auto hit = cache_->lookup(request.backend_id, key)) return {std::move(*hit), true};
  QueryResponse response = gateway_.query(request);
  cache_->store(request.backend_id, key, response);
  return {std::move(response), false};
}

QueryResponse cached_query(const QueryRequest& request, Gateway& gateway, ResponseCache& cache) {
  return Dispatcher(gateway, &cache).dispatch(request).response;
}

}  // namespace ttc
