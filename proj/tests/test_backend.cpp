// Backend contract tests: scripted table, hash mock goldens, planted world,
// batch-vs-sequential equivalence and continuation-offset filtering.

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "templens/backend.hpp"
#include "templens/hashing.hpp"

using namespace templens;

namespace {

ScoreRequest request_for(std::string prefix, std::string continuation) {
  ScoreRequest r;
  r.prefix = std::move(prefix);
  r.continuation = std::move(continuation);
  return r;
}

}  // namespace

TEST_CASE("scripted backend returns table entries and errors on misses") {
  ScriptedBackend backend;
  backend.add("ab", "c", -1.5);
  CHECK(backend.score(request_for("ab", "c")) == -1.5);
  CHECK_THROWS_AS(backend.score(request_for("ab", "d")), ScriptedMissError);
  CHECK_THROWS_AS(backend.score(request_for("", "c")), ScriptedMissError);
}

TEST_CASE("scripted backend loads JSONL fixtures with line attribution") {
  const auto path = std::filesystem::temp_directory_path() /
                    "templens_scripted_test.jsonl";
  {
    std::ofstream out(path);
    out << R"({"prefix": "ab", "continuation": "c", "logprob": -1.5})" << "\n";
    out << R"({"prefix": "x", "continuation": "y", "logprob": -0.25})" << "\n";
  }
  auto backend = ScriptedBackend::from_file(path);
  CHECK(backend->size() == 2);
  CHECK(backend->score(request_for("x", "y")) == -0.25);

  {
    std::ofstream out(path);
    out << R"({"prefix": "ok", "continuation": "k", "logprob": -1})" << "\n";
    out << R"({"prefix": "broken")" << "\n";
  }
  CHECK_THROWS_WITH_AS(ScriptedBackend::from_file(path),
                       doctest::Contains("line 2"), ScoreError);
  std::filesystem::remove(path);
}

TEST_CASE("scripted backend ids are content-addressed") {
  ScriptedBackend a, b, c;
  a.add("p", "q", -1.0);
  b.add("p", "q", -1.0);
  c.add("p", "q", -2.0);
  CHECK(a.id() == b.id());
  CHECK(a.id() != c.id());
}

TEST_CASE("hash mock golden values") {
  HashMockBackend backend;
  CHECK(backend.score(request_for("ab", "c")) ==
        doctest::Approx(-3.9298660014488389).epsilon(1e-15));
  CHECK(backend.score(request_for(
            "text: great fun It was great.\n\ntext: dull plot It was ",
            "terrible.")) ==
        doctest::Approx(-4.7800571721851357).epsilon(1e-15));
  CHECK(backend.score(request_for("", "x")) ==
        doctest::Approx(-1.4106650655673174).epsilon(1e-15));
}

TEST_CASE("hash mock is deterministic and range-bounded") {
  HashMockBackend backend;
  SplitMix64 rng(17);
  for (int i = 0; i < 500; ++i) {
    std::string prefix = "p" + std::to_string(rng.next());
    std::string continuation = "c" + std::to_string(rng.next());
    const double first = backend.score(request_for(prefix, continuation));
    const double second = backend.score(request_for(prefix, continuation));
    CHECK(first == second);
    CHECK(first > -5.0);
    CHECK(first < -1.0);
  }
}

TEST_CASE("hash mock separates prefix/continuation boundaries") {
  HashMockBackend backend;
  // Same concatenation, different split -> different scores (0x1F divider).
  CHECK(backend.score(request_for("ab", "c")) !=
        backend.score(request_for("a", "bc")));
}

TEST_CASE("empty continuations are rejected before any backend runs") {
  HashMockBackend backend;
  CHECK_THROWS_AS(backend.score(request_for("ab", "")), ScoreError);
  CHECK(backend.calls() == 0);
}

TEST_CASE("call counting") {
  HashMockBackend backend;
  backend.score(request_for("a", "b"));
  backend.score(request_for("a", "b"));
  CHECK(backend.calls() == 2);
  backend.reset_calls();
  CHECK(backend.calls() == 0);
}

TEST_CASE("batch scoring equals sequential scoring") {
  HashMockBackend batch_backend, seq_backend;
  std::vector<ScoreRequest> requests;
  SplitMix64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    requests.push_back(request_for("p" + std::to_string(rng.next()),
                                   "c" + std::to_string(rng.next())));
  }
  const auto batched = batch_backend.score_batch(requests);
  REQUIRE(batched.size() == requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    CHECK(batched[i] == seq_backend.score(requests[i]));
  }
}

TEST_CASE("batch errors carry the request index") {
  ScriptedBackend backend;
  backend.add("a", "b", -1.0);
  std::vector<ScoreRequest> requests = {request_for("a", "b"),
                                        request_for("miss", "x")};
  CHECK_THROWS_WITH_AS(backend.score_batch(requests),
                       doctest::Contains("request 1"), ScoreError);
  CHECK_THROWS_AS(backend.score_batch({}), ScoreError);
}

TEST_CASE("batch output permutes with its input") {
  HashMockBackend backend;
  std::vector<ScoreRequest> requests = {request_for("a", "1"),
                                        request_for("b", "2"),
                                        request_for("c", "3")};
  const auto forward = backend.score_batch(requests);
  std::vector<ScoreRequest> reversed(requests.rbegin(), requests.rend());
  const auto backward = backend.score_batch(reversed);
  for (std::size_t i = 0; i < requests.size(); ++i) {
    CHECK(forward[i] == backward[requests.size() - 1 - i]);
  }
}

TEST_CASE("sum_continuation_logprobs applies the offset rule") {
  // Tokens at offsets [0,4,9] with prefix length 9: only the last counts.
  const std::vector<TokenScore> tokens = {
      {"text:", -1.0, 0}, {" dull", -2.0, 4}, {" great", -0.5, 9}};
  CHECK(sum_continuation_logprobs(tokens, 9) == -0.5);

  // Prefix length 4: the last two tokens count.
  CHECK(sum_continuation_logprobs(tokens, 4) == -2.5);

  // Prefix length 0: everything counts.
  CHECK(sum_continuation_logprobs(tokens, 0) == -3.5);
}

TEST_CASE("boundary straddles and empty spans are explicit errors") {
  const std::vector<TokenScore> tokens = {
      {"text:", -1.0, 0}, {" dull", -2.0, 4}, {" great", -0.5, 9}};
  // Prefix ends inside the token starting at 4.
  CHECK_THROWS_AS(sum_continuation_logprobs(tokens, 6),
                  BoundaryConflictError);
  // Prefix swallows every token.
  CHECK_THROWS_AS(sum_continuation_logprobs(tokens, 100),
                  BoundaryConflictError);
  CHECK_THROWS_AS(sum_continuation_logprobs({}, 0), BoundaryConflictError);

  // Non-increasing offsets are a protocol violation, not a boundary issue.
  const std::vector<TokenScore> bad = {{"a", -1.0, 3}, {"b", -1.0, 3}};
  CHECK_THROWS_AS(sum_continuation_logprobs(bad, 3), ScoreError);
}

TEST_CASE("planted backend reads meta and matches its formula") {
  PlantedBackend::Params params;
  params.signal = 2.0;
  params.bias_amplitude = 2.0;
  params.noise = 0.5;
  params.bias_seed = 7;
  PlantedBackend backend(params, std::vector<int>{1, 0});

  ScoreRequest request = request_for("ignored", "ignored");
  request.meta.template_id = 5;
  request.meta.example_id = 0;
  request.meta.class_index = 0;

  // Independent recomputation of the logit (class 0, gold is 1).
  const double bias = 2.0 * unit_from_hash(hash_ids({7, 1, 5, 0}));
  const double noise = 0.5 * unit_from_hash(hash_ids({7, 2, 5, 0, 0}));
  CHECK(backend.score(request) == doctest::Approx(bias + noise).epsilon(1e-15));

  request.meta.class_index = 1;  // the gold class gains the signal term
  const double bias1 = 2.0 * unit_from_hash(hash_ids({7, 1, 5, 1}));
  const double noise1 = 0.5 * unit_from_hash(hash_ids({7, 2, 5, 0, 1}));
  CHECK(backend.score(request) ==
        doctest::Approx(2.0 + bias1 + noise1).epsilon(1e-15));
}

TEST_CASE("planted backend requires complete meta") {
  PlantedBackend backend(PlantedBackend::Params{}, std::vector<int>{0});
  ScoreRequest request = request_for("p", "c");
  CHECK_THROWS_AS(backend.score(request), ScoreError);  // all tags missing
  request.meta.template_id = 1;
  request.meta.example_id = 99;  // outside the gold table
  request.meta.class_index = 0;
  CHECK_THROWS_AS(backend.score(request), ScoreError);
  CHECK(backend.meta_sensitive());
}

TEST_CASE("planted ids reflect their parameters") {
  PlantedBackend::Params a, b;
  b.bias_seed = 1;
  PlantedBackend first(a, std::vector<int>{0});
  PlantedBackend second(b, std::vector<int>{0});
  CHECK(first.id() != second.id());
  CHECK(first.id() == PlantedBackend(a, std::vector<int>{0, 1}).id());
}
