#include "templens/backend.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "templens/hashing.hpp"

namespace templens {
namespace {

std::string table_key(const std::string& prefix,
                      const std::string& continuation) {
  std::string key;
  key.reserve(prefix.size() + continuation.size() + 1);
  key.append(prefix);
  key.push_back('\x1f');
  key.append(continuation);
  return key;
}

}  // namespace

std::vector<double> Backend::score_batch(
    const std::vector<ScoreRequest>& requests) {
  if (requests.empty()) {
    throw ScoreError("score_batch: empty request list");
  }
  std::vector<double> out;
  out.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    try {
      out.push_back(score(requests[i]));
    } catch (const std::exception& e) {
      throw ScoreError("score_batch: request " + std::to_string(i) + ": " +
                       e.what());
    }
  }
  return out;
}

double sum_continuation_logprobs(const std::vector<TokenScore>& tokens,
                                 std::size_t prefix_length) {
  std::size_t previous = 0;
  bool first = true;
  for (const TokenScore& token : tokens) {
    if (!first && token.char_offset <= previous) {
      throw ScoreError("token offsets are not strictly increasing");
    }
    previous = token.char_offset;
    first = false;
  }

  double sum = 0.0;
  bool found_start = false;
  for (const TokenScore& token : tokens) {
    if (token.char_offset < prefix_length) continue;
    if (!found_start) {
      if (token.char_offset != prefix_length) {
        throw BoundaryConflictError(
            "token straddles the prefix/continuation boundary: first "
            "continuation token starts at offset " +
            std::to_string(token.char_offset) + ", prefix length is " +
            std::to_string(prefix_length));
      }
      found_start = true;
    }
    sum += token.logprob;
  }
  if (!found_start) {
    throw BoundaryConflictError(
        "continuation span is empty after offset filtering (prefix length " +
        std::to_string(prefix_length) + ")");
  }
  return sum;
}

void ScriptedBackend::add(const std::string& prefix,
                          const std::string& continuation, double logprob) {
  table_[table_key(prefix, continuation)] = logprob;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ScoreError("cannot open scripted table: " + path.string());
  }
  auto backend = std::make_shared<ScriptedBackend>();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      backend->add(doc.at("prefix").get<std::string>(),
                   doc.at("continuation").get<std::string>(),
                   doc.at("logprob").get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw ScoreError("scripted table " + path.string() + " line " +
                       std::to_string(line_no) + ": " + e.what());
    }
  }
  return backend;
}

std::string ScriptedBackend::id() const {
  // Content-addressed so that two different tables never share cache keys.
  std::uint64_t h = kFnvOffsetBasis;
  for (const auto& [key, value] : table_) {
    std::uint64_t entry = fnv1a64(key);
    entry = fnv1a64_u64(std::bit_cast<std::uint64_t>(value), entry);
    h ^= mix64(entry);  // XOR: independent of map iteration order
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scripted:%016llx",
                static_cast<unsigned long long>(mix64(h)));
  return buf;
}

double ScriptedBackend::do_score(const ScoreRequest& request) {
  const auto it = table_.find(table_key(request.prefix, request.continuation));
  if (it == table_.end()) {
    throw ScriptedMissError(
        "scripted table miss for prefix \"" + request.prefix +
        "\", continuation \"" + request.continuation + "\"");
  }
  return it->second;
}

double HashMockBackend::do_score(const ScoreRequest& request) {
  std::uint64_t h = fnv1a64(request.prefix);
  h = fnv1a64_byte(0x1f, h);
  h = fnv1a64(request.continuation, h);
  return -(1.0 + 4.0 * unit_from_hash(mix64(h)));
}

PlantedBackend::PlantedBackend(Params params, std::vector<int> golds)
    : params_(params),
      gold_([golds = std::move(golds)](std::int64_t example_id) {
        if (example_id < 0 ||
            example_id >= static_cast<std::int64_t>(golds.size())) {
          throw ScoreError("planted backend: example id " +
                           std::to_string(example_id) +
                           " outside the gold table");
        }
        return golds[static_cast<std::size_t>(example_id)];
      }) {}

std::string PlantedBackend::id() const {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "planted:s=%g,a=%g,eps=%g,bias=%llu",
                params_.signal, params_.bias_amplitude, params_.noise,
                static_cast<unsigned long long>(params_.bias_seed));
  return buf;
}

double PlantedBackend::do_score(const ScoreRequest& request) {
  const PromptMeta& meta = request.meta;
  if (meta.template_id < 0 || meta.example_id < 0 || meta.class_index < 0) {
    throw ScoreError(
        "planted backend requires template/example/class meta tags");
  }
  const auto tid = static_cast<std::uint64_t>(meta.template_id);
  const auto eid = static_cast<std::uint64_t>(meta.example_id);
  const auto cls = static_cast<std::uint64_t>(meta.class_index);
  const double on_gold =
      meta.class_index == gold_(meta.example_id) ? params_.signal : 0.0;
  const double bias =
      params_.bias_amplitude *
      unit_from_hash(hash_ids({params_.bias_seed, 1, tid, cls}));
  const double noise =
      params_.noise *
      unit_from_hash(hash_ids({params_.bias_seed, 2, tid, eid, cls}));
  return on_gold + bias + noise;
}

}  // namespace templens
