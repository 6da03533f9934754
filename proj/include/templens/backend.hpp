#pragma once

// Scoring backends. Every backend answers one question: the natural-log
// probability of a continuation string given a prefix string. Three
// deterministic test backends (scripted table, hash mock, planted world)
// make the rest of the pipeline testable without a live model; the remote
// backend lives in remote.hpp.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "templens/render.hpp"

namespace templens {

struct ScoreRequest {
  std::string prefix;
  std::string continuation;  // must be non-empty
  PromptMeta meta;           // ignored by real backends
  Mode mode = Mode::kDirect;
};

inline ScoreRequest to_request(const RenderedPrompt& prompt) {
  return ScoreRequest{prompt.prefix, prompt.continuation, prompt.meta,
                      prompt.mode};
}

/// Per-token scoring detail from token-level backends.
struct TokenScore {
  std::string token_text;
  double logprob = 0.0;
  std::size_t char_offset = 0;  // offset of token start in the full sequence
};

struct ScoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A token straddles the prefix/continuation boundary, or the continuation
/// span is empty after offset filtering.
struct BoundaryConflictError : ScoreError {
  using ScoreError::ScoreError;
};

/// Scripted-table lookup miss.
struct ScriptedMissError : ScoreError {
  using ScoreError::ScoreError;
};

class Backend {
 public:
  virtual ~Backend() = default;

  /// Stable identity string; part of the cache key.
  virtual std::string id() const = 0;

  /// log P(continuation | prefix). Deterministic per backend contract.
  double score(const ScoreRequest& request) {
    if (request.continuation.empty()) {
      throw ScoreError("score request has an empty continuation");
    }
    calls_.fetch_add(1, std::memory_order_relaxed);
    return do_score(request);
  }

  /// Element i is score(requests[i]); order is always preserved.
  std::vector<double> score_batch(const std::vector<ScoreRequest>& requests);

  /// True when scores depend on request meta, not only on the strings.
  virtual bool meta_sensitive() const { return false; }

  /// Number of score evaluations actually performed (cache hits excluded).
  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
  void reset_calls() { calls_.store(0, std::memory_order_relaxed); }

 protected:
  virtual double do_score(const ScoreRequest& request) = 0;

 private:
  std::atomic<std::uint64_t> calls_{0};
};

using BackendPtr = std::shared_ptr<Backend>;

/// Sums the logprobs of all tokens starting at or after the prefix end.
/// Throws BoundaryConflictError when a token straddles the boundary (no
/// token starts exactly at the prefix length) or when the continuation span
/// is empty after filtering.
double sum_continuation_logprobs(const std::vector<TokenScore>& tokens,
                                 std::size_t prefix_length);

/// Exact associative table (prefix, continuation) -> logprob; any miss is an
/// error. Entries load from a JSONL fixture or are added programmatically.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend() = default;

  void add(const std::string& prefix, const std::string& continuation,
           double logprob);
  static std::shared_ptr<ScriptedBackend> from_file(
      const std::filesystem::path& path);

  std::string id() const override;
  std::size_t size() const { return table_.size(); }

 protected:
  double do_score(const ScoreRequest& request) override;

 private:
  std::unordered_map<std::string, double> table_;  // key = prefix \x1f cont
};

/// Fully specified deterministic pseudo-scorer:
///   u = unit(mix64(fnv1a64(prefix || 0x1F || continuation)))
///   score = -(1 + 4u), always in (-5, -1).
class HashMockBackend : public Backend {
 public:
  std::string id() const override { return "hash-mock"; }

 protected:
  double do_score(const ScoreRequest& request) override;
};

/// Synthetic world with genuine template sensitivity. Scores are per-class
/// logits read off the request meta:
///   logit = signal * [class == gold(example)]
///         + bias_amplitude * u01(h(bias_seed, template, class))
///         + noise * u01(h(bias_seed, template, example, class))
/// The template-bias term makes some templates systematically favor wrong
/// classes, which is what ensembling is expected to smooth out.
class PlantedBackend : public Backend {
 public:
  struct Params {
    double signal = 2.0;
    double bias_amplitude = 2.0;
    double noise = 0.5;
    std::uint64_t bias_seed = 0;
  };

  PlantedBackend(Params params, std::function<int(std::int64_t)> gold)
      : params_(params), gold_(std::move(gold)) {}
  PlantedBackend(Params params, std::vector<int> golds);

  std::string id() const override;
  bool meta_sensitive() const override { return true; }
  const Params& params() const { return params_; }

 protected:
  double do_score(const ScoreRequest& request) override;

 private:
  Params params_;
  std::function<int(std::int64_t)> gold_;
};

}  // namespace templens
