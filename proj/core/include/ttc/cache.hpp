#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "ttc/gateway.hpp"

namespace ttc {

/// Append-only response store: one JSONL file per backend under `dir`,
/// each line {"key": ..., "response": ...}. Corrupt lines are skipped with
/// a warning and behave as misses.
class ResponseCache {
 public:
  using WarningSink = std::function<void(const std::string&)>;

  explicit ResponseCache(std::filesystem::path dir, WarningSink warn = {});

  std::optional<QueryResponse> lookup(const std::string& backend_id, const std::string& key);
  void store(const std::string& backend_id, const std::string& key, const QueryResponse& response);

  std::size_t size(const std::string& backend_id);
  std::uint64_t warnings() const noexcept { return warnings_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path file_for(const std::string& backend_id) const;

 private:
  struct Shard {
    bool loaded = false;
    std::unordered_map<std::string, QueryResponse> entries;
  };
  Shard& shard_locked(const std::string& backend_id);
  void warn(const std::string& message);

  std::filesystem::path dir_;
  WarningSink warn_;
  std::shared_mutex map_mu_;
  std::mutex append_mu_;
  std::map<std::string, Shard> shards_;
  std::uint64_t warnings_ = 0;
};

struct DispatchResult {
  QueryResponse response;
  bool cache_hit = false;
};

/// Gateway front end that consults the cache first.
class Dispatcher {
 public:
  Dispatcher(Gateway& gateway, ResponseCache* cache) : gateway_(gateway), cache_(cache) {}

  DispatchResult dispatch(const QueryRequest& request);

  Gateway& gateway() noexcept { return gateway_; }
  ResponseCache* cache() noexcept { return cache_; }

 private:
  Gateway& gateway_;
  ResponseCache* cache_;
};

/// Free-function form of Dispatcher::dispatch.
QueryResponse cached_query(const QueryRequest& request, Gateway& gateway, ResponseCache& cache);

}  // namespace ttc
