#pragma once

// Transparent score cache. Values are deterministic per backend identity,
// so the cache can never change a result - only skip recomputation. The
// on-disk form is an append-only file of (key-hash, value) records that is
// replayed on open, which makes interrupted runs resumable.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>

#include "templens/backend.hpp"

namespace templens {

/// 128-bit cache key: two independent FNV streams over
/// (backend id, prefix, continuation) and, for meta-sensitive backends,
/// the meta id tuple.
struct CacheKey {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  bool operator==(const CacheKey&) const = default;
};

struct CacheKeyHasher {
  std::size_t operator()(const CacheKey& key) const noexcept {
    return static_cast<std::size_t>(key.lo ^ (key.hi * 0x9E3779B97F4A7C15ULL));
  }
};

/// Concurrent map with optional append-only file persistence. Writes for
/// identical keys always carry identical values, so last-write-wins is safe.
class ScoreCache {
 public:
  ScoreCache() = default;  // in-memory only
  explicit ScoreCache(const std::filesystem::path& path);

  std::optional<double> lookup(const CacheKey& key) const;
  void store(const CacheKey& key, double value);

  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<CacheKey, double, CacheKeyHasher> entries_;
  std::ofstream file_;
  std::mutex file_mutex_;
};

/// Decorator that consults the cache before delegating to the inner
/// backend. Results are bit-identical with and without the cache.
class CachedBackend : public Backend {
 public:
  CachedBackend(BackendPtr inner, std::shared_ptr<ScoreCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}

  std::string id() const override { return inner_->id(); }
  bool meta_sensitive() const override { return inner_->meta_sensitive(); }

  std::uint64_t hits() const { return hits_.load(); }

  static CacheKey key_for(const Backend& backend, const ScoreRequest& request);

 protected:
  double do_score(const ScoreRequest& request) override;

 private:
  BackendPtr inner_;
  std::shared_ptr<ScoreCache> cache_;
  std::atomic<std::uint64_t> hits_{0};
};

}  // namespace templens
