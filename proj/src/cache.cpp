#include "templens/cache.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>

#include "templens/hashing.hpp"

namespace templens {
namespace {

// Second stream uses a shifted basis so lo and hi never coincide.
constexpr std::uint64_t kSecondBasis = kFnvOffsetBasis ^ 0x9E3779B97F4A7C15ULL;

std::uint64_t absorb(const Backend& backend, const ScoreRequest& request,
                     std::uint64_t h) {
  h = fnv1a64(backend.id(), h);
  h = fnv1a64_byte(0x1f, h);
  h = fnv1a64(request.prefix, h);
  h = fnv1a64_byte(0x1f, h);
  h = fnv1a64(request.continuation, h);
  if (backend.meta_sensitive()) {
    h = fnv1a64_byte(0x1f, h);
    h = fnv1a64_u64(static_cast<std::uint64_t>(request.meta.template_id), h);
    h = fnv1a64_u64(static_cast<std::uint64_t>(request.meta.example_id), h);
    h = fnv1a64_u64(static_cast<std::uint64_t>(request.meta.class_index), h);
  }
  return h;
}

}  // namespace

ScoreCache::ScoreCache(const std::filesystem::path& path) {
  // Replay any existing records, then reopen for appending.
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::uint64_t lo = 0, hi = 0;
    double value = 0.0;
    char line[128];
    while (in.getline(line, sizeof(line))) {
      if (std::sscanf(line, "%" SCNx64 " %" SCNx64 " %la", &lo, &hi, &value) ==
          3) {
        entries_[CacheKey{lo, hi}] = value;
      }
    }
  }
  file_.open(path, std::ios::app);
  if (!file_) {
    throw ScoreError("cannot open cache file for append: " + path.string());
  }
}

std::optional<double> ScoreCache::lookup(const CacheKey& key) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::store(const CacheKey& key, double value) {
  {
    std::unique_lock lock(mutex_);
    entries_[key] = value;
  }
  if (file_.is_open()) {
    char line[128];
    // %a is exact for doubles, so replay restores bit-identical values.
    std::snprintf(line, sizeof(line), "%016" PRIx64 " %016" PRIx64 " %a\n",
                  key.lo, key.hi, value);
    std::lock_guard lock(file_mutex_);
    file_ << line;
    file_.flush();
  }
}

std::size_t ScoreCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

CacheKey CachedBackend::key_for(const Backend& backend,
                                const ScoreRequest& request) {
  return CacheKey{mix64(absorb(backend, request, kFnvOffsetBasis)),
                  mix64(absorb(backend, request, kSecondBasis))};
}

double CachedBackend::do_score(const ScoreRequest& request) {
  const CacheKey key = key_for(*inner_, request);
  if (const auto cached = cache_->lookup(key)) {
    hits_.fetch_add(1, std::memory_order_relaxed);
    return *cached;
  }
  const double value = inner_->score(request);
  cache_->store(key, value);
  return value;
}

}  // namespace templens
