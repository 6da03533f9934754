// Grammar parsing, enumeration, id round-trips and seeded sampling.

#include <set>

#include "doctest.h"
#include "templens/grammar.hpp"
#include "templens/hashing.hpp"

using namespace templens;

namespace {

ComponentSet tiny_grammar() {
  ComponentSet g;
  g.task_name = "tiny";
  g.input_verbalizers = {"in: {}", "{}"};
  g.output_verbalizers = {"out: {}", "A {} one.", "{}"};
  g.intra_separators = {" ", "\n"};
  g.inter_separators = {" "};
  g.label_words = {"no", "yes"};
  return g;
}

ComponentSet preset(const char* name) {
  return load_grammar(std::string(TEMPLENS_PRESET_DIR) + "/" + name);
}

}  // namespace

TEST_CASE("shipped presets reproduce the published template counts") {
  CHECK(preset("sst2.json").template_count() == 216);
  CHECK(preset("dbpedia.json").template_count() == 168);
  CHECK(preset("agnews.json").template_count() == 168);
  CHECK(preset("trec.json").template_count() == 168);

  CHECK(enumerate_templates(preset("sst2.json")).size() == 216);
  CHECK(enumerate_templates(preset("agnews.json")).size() == 168);
}

TEST_CASE("preset component shapes match the published grammar") {
  const ComponentSet sst2 = preset("sst2.json");
  CHECK(sst2.input_verbalizers.size() == 4);
  CHECK(sst2.output_verbalizers.size() == 9);
  CHECK(sst2.intra_separators.size() == 2);
  CHECK(sst2.inter_separators.size() == 3);
  CHECK(sst2.num_classes() == 2);
  CHECK(preset("dbpedia.json").num_classes() == 14);
  CHECK(preset("agnews.json").num_classes() == 4);
  CHECK(preset("trec.json").num_classes() == 6);
}

TEST_CASE("newline separators survive a serialization round-trip") {
  const ComponentSet sst2 = preset("sst2.json");
  const ComponentSet again = parse_grammar(grammar_to_json(sst2));
  CHECK(again.inter_separators == sst2.inter_separators);
  CHECK(again.inter_separators[2] == "\n\n");
  CHECK(again.input_verbalizers == sst2.input_verbalizers);
  CHECK(again.label_words == sst2.label_words);
}

TEST_CASE("enumerate_templates ids are 0..count-1 in order") {
  const auto templates = enumerate_templates(tiny_grammar());
  REQUIRE(templates.size() == 2 * 3 * 2 * 1);
  for (std::size_t i = 0; i < templates.size(); ++i) {
    CHECK(templates[i].id == i);
  }
  // Last digit (inter) fastest, first digit (input verbalizer) slowest.
  CHECK(templates[0].input_verbalizer == "in: {}");
  CHECK(templates[templates.size() - 1].input_verbalizer == "{}");
}

TEST_CASE("template id round-trip over a full enumeration") {
  const ComponentSet g = preset("sst2.json");
  for (const Template& tpl : enumerate_templates(g)) {
    CHECK(decode_template(g, tpl.id) == tpl);
  }
  CHECK_THROWS_AS(decode_template(g, 216), GrammarError);
}

TEST_CASE("degenerate one-option grammar yields a single template") {
  ComponentSet g;
  g.task_name = "unit";
  g.input_verbalizers = {"{}"};
  g.output_verbalizers = {"{}"};
  g.intra_separators = {" "};
  g.inter_separators = {" "};
  g.label_words = {"x"};
  const auto templates = enumerate_templates(g);
  REQUIRE(templates.size() == 1);
  CHECK(templates[0].id == 0);
}

TEST_CASE("validation errors name the offending field") {
  ComponentSet g = tiny_grammar();

  SUBCASE("missing placeholder") {
    g.output_verbalizers[0] = "label:";
    CHECK_THROWS_WITH_AS(g.validate(),
                         doctest::Contains("output_verbalizers"),
                         GrammarError);
  }
  SUBCASE("two placeholders") {
    g.input_verbalizers[0] = "{} and {}";
    CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("input_verbalizers"),
                         GrammarError);
  }
  SUBCASE("duplicate option") {
    g.intra_separators = {" ", " "};
    CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("intra_separators"),
                         GrammarError);
  }
  SUBCASE("empty list") {
    g.inter_separators.clear();
    CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("inter_separators"),
                         GrammarError);
  }
  SUBCASE("duplicate label word") {
    g.label_words = {"yes", "yes"};
    CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("label_words"),
                         GrammarError);
  }
}

TEST_CASE("parse_grammar rejects malformed documents") {
  CHECK_THROWS_AS(parse_grammar("not json"), GrammarError);
  CHECK_THROWS_AS(parse_grammar("{\"task_name\": \"x\"}"), GrammarError);
}

TEST_CASE("sample_templates is deterministic and duplicate-free") {
  const ComponentSet g = preset("sst2.json");

  const auto first = sample_templates(g, 10, 7);
  const auto second = sample_templates(g, 10, 7);
  REQUIRE(first.size() == 10);
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i] == second[i]);
  }

  // Frozen draw for (n=216, k=10, seed=7); computed independently.
  const std::vector<std::uint64_t> expected = {183, 115, 134, 9,  106,
                                               182, 214, 93,  41, 131};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(first[i].id == expected[i]);
  }

  std::set<std::uint64_t> ids;
  for (const auto& tpl : sample_templates(g, 50, 99)) ids.insert(tpl.id);
  CHECK(ids.size() == 50);
}

TEST_CASE("sampling the full count returns a permutation") {
  const ComponentSet g = preset("sst2.json");
  const auto all = sample_templates(g, 216, 5);
  std::set<std::uint64_t> ids;
  for (const auto& tpl : all) ids.insert(tpl.id);
  CHECK(ids.size() == 216);

  // Small frozen permutation from the independent implementation.
  const ComponentSet tiny = [] {
    ComponentSet g;
    g.task_name = "six";
    g.input_verbalizers = {"a {}", "b {}", "c {}"};
    g.output_verbalizers = {"{}"};
    g.intra_separators = {" "};
    g.inter_separators = {" ", "\n"};
    g.label_words = {"x"};
    return g;
  }();
  REQUIRE(tiny.template_count() == 6);
  const auto perm = sample_templates(tiny, 6, 0);
  const std::vector<std::uint64_t> expected = {1, 0, 5, 4, 2, 3};
  for (std::size_t i = 0; i < 6; ++i) CHECK(perm[i].id == expected[i]);
}

TEST_CASE("sample_templates rejects out-of-range counts") {
  const ComponentSet g = preset("sst2.json");
  CHECK_THROWS_AS(sample_templates(g, 217, 0), GrammarError);
  CHECK_THROWS_AS(sample_templates(g, 0, 0), GrammarError);
}

TEST_CASE("samples are always members of the enumeration") {
  const ComponentSet g = preset("agnews.json");
  for (const Template& tpl : sample_templates(g, 30, 11)) {
    CHECK(decode_template(g, tpl.id) == tpl);
    CHECK(tpl.id < g.template_count());
  }
}
