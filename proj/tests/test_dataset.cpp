// Dataset ingestion: JSONL parsing, content digests, and line-attributed
// validation errors.

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "templens/dataset.hpp"

using namespace templens;

TEST_CASE("well-formed files parse with a stable digest") {
  const std::string text =
      R"({"text": "good movie", "label": 1})" "\n"
      R"({"text": "bad movie", "label": 0})" "\n";
  const Dataset first = parse_dataset(text, 2);
  REQUIRE(first.size() == 2);
  CHECK(first.examples[0].text == "good movie");
  CHECK(first.examples[0].label == 1);
  CHECK(first.examples[1].label == 0);

  const Dataset second = parse_dataset(text, 2);
  CHECK(first.digest == second.digest);
  CHECK(first.digest != 0);
}

TEST_CASE("digest follows content, not path") {
  const std::string text = R"({"text": "x", "label": 0})" "\n";
  const auto dir = std::filesystem::temp_directory_path();
  const auto path_a = dir / "templens_ds_a.jsonl";
  const auto path_b = dir / "templens_ds_b.jsonl";
  std::ofstream(path_a) << text;
  std::ofstream(path_b) << text;
  CHECK(load_dataset(path_a).digest == load_dataset(path_b).digest);
  std::filesystem::remove(path_a);
  std::filesystem::remove(path_b);
}

TEST_CASE("digest is sensitive to text, label and order") {
  const Dataset base = parse_dataset(R"({"text": "a", "label": 0})" "\n"
                                     R"({"text": "b", "label": 1})" "\n");
  const Dataset swapped = parse_dataset(R"({"text": "b", "label": 1})" "\n"
                                        R"({"text": "a", "label": 0})" "\n");
  const Dataset relabeled = parse_dataset(R"({"text": "a", "label": 1})" "\n"
                                          R"({"text": "b", "label": 1})" "\n");
  CHECK(base.digest != swapped.digest);
  CHECK(base.digest != relabeled.digest);
}

TEST_CASE("labels are range-checked with line attribution") {
  const std::string negative = R"({"text": "x", "label": -1})" "\n";
  CHECK_THROWS_WITH_AS(parse_dataset(negative), doctest::Contains("line 1"),
                       DatasetError);

  const std::string out_of_range =
      R"({"text": "a", "label": 0})" "\n"
      R"({"text": "b", "label": 2})" "\n";
  CHECK_THROWS_WITH_AS(parse_dataset(out_of_range, 2),
                       doctest::Contains("line 2"), DatasetError);
  // Without a class count, any non-negative label passes.
  CHECK_NOTHROW(parse_dataset(out_of_range));
}

TEST_CASE("parse failures carry the line number") {
  const std::string bad =
      R"({"text": "ok", "label": 0})" "\n"
      "not json\n";
  CHECK_THROWS_WITH_AS(parse_dataset(bad), doctest::Contains("line 2"),
                       DatasetError);
  const std::string missing = R"({"label": 0})" "\n";
  CHECK_THROWS_AS(parse_dataset(missing), DatasetError);
}

TEST_CASE("blank lines are skipped, order is preserved") {
  const std::string text =
      R"({"text": "first", "label": 0})" "\n"
      "\n"
      R"({"text": "second", "label": 1})" "\n";
  const Dataset ds = parse_dataset(text, 2);
  REQUIRE(ds.size() == 2);
  CHECK(ds.examples[0].text == "first");
  CHECK(ds.examples[1].text == "second");
}

TEST_CASE("serialization round-trips including escapes") {
  const std::vector<Example> examples = {{"line\nbreak \"q\"", 1},
                                         {"tab\tseparated", 0}};
  const Dataset ds = parse_dataset(dataset_to_jsonl(examples));
  REQUIRE(ds.size() == 2);
  CHECK(ds.examples[0] == examples[0]);
  CHECK(ds.examples[1] == examples[1]);
}

TEST_CASE("missing files are reported") {
  CHECK_THROWS_AS(load_dataset("/nonexistent/nowhere.jsonl"), DatasetError);
}
