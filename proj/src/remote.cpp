#include "templens/remote.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace templens {
namespace {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ScoreError("remote endpoint URL needs a scheme: " + url);
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return ParsedUrl{url, "/"};
  }
  return ParsedUrl{url.substr(0, path_start), url.substr(path_start)};
}

/// Counting semaphore with a runtime limit.
class InFlightLimit {
 public:
  explicit InFlightLimit(int limit) : available_(limit) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }
  void release() {
    {
      std::lock_guard lock(mutex_);
      ++available_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int available_;
};

}  // namespace

struct RemoteBackend::Impl {
  ParsedUrl url;
  std::string api_key;
  InFlightLimit limit;

  Impl(const RemoteConfig& config)
      : url(split_url(config.endpoint)), limit(config.max_in_flight) {
    if (const char* key = std::getenv(config.api_key_env.c_str())) {
      api_key = key;
    }
  }
};

RemoteBackend::RemoteBackend(RemoteConfig config)
    : impl_(std::make_unique<Impl>(config)), config_(std::move(config)) {
  if (config_.max_retries < 1) {
    throw ScoreError("remote backend: max_retries must be at least 1");
  }
}

RemoteBackend::~RemoteBackend() = default;

std::string RemoteBackend::id() const {
  return "remote:" + config_.model + "@" + config_.endpoint;
}

std::vector<TokenScore> RemoteBackend::parse_response(
    const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScoreError(std::string("remote response is not valid JSON: ") +
                     e.what());
  }
  try {
    const auto& logprobs = doc.at("choices").at(0).at("logprobs");
    const auto& tokens = logprobs.at("tokens");
    const auto& values = logprobs.at("token_logprobs");
    const auto& offsets = logprobs.at("text_offset");
    if (tokens.size() != values.size() || tokens.size() != offsets.size()) {
      throw ScoreError("remote response: token/logprob/offset length mismatch");
    }
    std::vector<TokenScore> out;
    out.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      TokenScore score;
      score.token_text = tokens[i].get<std::string>();
      // The first echoed token often has a null logprob.
      score.logprob = values[i].is_null()
                          ? std::numeric_limits<double>::quiet_NaN()
                          : values[i].get<double>();
      score.char_offset = offsets[i].get<std::size_t>();
      out.push_back(std::move(score));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ScoreError(std::string("remote response missing echo logprobs: ") +
                     e.what());
  }
}

double RemoteBackend::do_score(const ScoreRequest& request) {
  nlohmann::json payload;
  payload["model"] = config_.model;
  payload["prompt"] = request.prefix + request.continuation;
  payload["max_tokens"] = 0;
  payload["echo"] = true;
  payload["logprobs"] = 1;
  const std::string body = payload.dump();

  httplib::Headers headers;
  if (!impl_->api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + impl_->api_key);
  }

  std::string failure;
  for (int attempt = 1; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 1 && config_.retry_delay_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          config_.retry_delay_ms << (attempt - 2)));
    }
    impl_->limit.acquire();
    httplib::Client client(impl_->url.base);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    auto response =
        client.Post(impl_->url.path, headers, body, "application/json");
    impl_->limit.release();

    if (!response) {
      failure = "connection failed: " + httplib::to_string(response.error());
      continue;  // retryable
    }
    if (response->status >= 500) {
      failure = "server error " + std::to_string(response->status);
      continue;  // retryable
    }
    if (response->status != 200) {
      throw RemoteError("remote request rejected with status " +
                            std::to_string(response->status) + ": " +
                            response->body,
                        attempt);
    }
    const std::vector<TokenScore> tokens = parse_response(response->body);
    const double sum = sum_continuation_logprobs(tokens, request.prefix.size());
    if (std::isnan(sum)) {
      throw ScoreError(
          "remote response: token logprob missing inside the continuation "
          "span");
    }
    return sum;
  }
  throw RemoteError("remote scoring failed: " + failure, config_.max_retries);
}

}  // namespace templens
