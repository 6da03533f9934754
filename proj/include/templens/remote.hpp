#pragma once

// Remote scoring over an echo-logprob completions endpoint. The request
// carries the full prefix+continuation sequence with max_tokens=0, echo and
// per-token logprobs enabled; the continuation score is the sum of logprobs
// of tokens starting at or after the prefix end.

#include <cstdint>
#include <string>

#include "templens/backend.hpp"

namespace templens {

struct RemoteConfig {
  std::string endpoint;  // full URL, e.g. http://host:8000/v1/completions
  std::string model;
  std::string api_key_env = "TEMPLENS_API_KEY";
  int max_retries = 3;        // total attempts = max_retries
  int retry_delay_ms = 250;   // base delay, doubled per attempt
  int max_in_flight = 4;
  int timeout_seconds = 120;
};

struct RemoteError : ScoreError {
  RemoteError(const std::string& message, int attempts)
      : ScoreError(message + " (after " + std::to_string(attempts) +
                   " attempt" + (attempts == 1 ? "" : "s") + ")"),
        attempts(attempts) {}
  int attempts;
};

class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config);
  ~RemoteBackend() override;

  std::string id() const override;

  /// Parses one wire response body into per-token scores. Exposed for
  /// fixture-driven tests of the offset arithmetic.
  static std::vector<TokenScore> parse_response(const std::string& body);

 protected:
  double do_score(const ScoreRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  RemoteConfig config_;
};

}  // namespace templens
