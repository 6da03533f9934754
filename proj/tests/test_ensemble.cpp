// Ensemble aggregation: probability averaging, majority voting and the
// evaluation-cost contract of ensemble_predict.

#include "doctest.h"
#include "templens/ensemble.hpp"

using namespace templens;

namespace {

LabelDistribution dist(std::vector<double> probs) {
  return LabelDistribution{std::move(probs), Method::kDirect};
}

ComponentSet toy_grammar() {
  ComponentSet g;
  g.task_name = "toy";
  g.input_verbalizers = {"text: {}", "{}"};
  g.output_verbalizers = {"It was {}.", "label: {}"};
  g.intra_separators = {" "};
  g.inter_separators = {"\n"};
  g.label_words = {"terrible", "great"};
  return g;
}

}  // namespace

TEST_CASE("ensemble_average is the element-wise mean") {
  const auto avg = ensemble_average({dist({0.8, 0.2}), dist({0.4, 0.6})});
  CHECK(avg.method == Method::kEnsemble);
  CHECK(avg.probs[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(avg.probs[1] == doctest::Approx(0.4).epsilon(1e-12));

  // Averaging can flip the prediction relative to a majority of members:
  // two weak votes for class 1 against one confident vote for class 0.
  const auto flipped = ensemble_average(
      {dist({0.9, 0.1}), dist({0.45, 0.55}), dist({0.45, 0.55})});
  CHECK(classify(flipped) == 0);

  const auto singleton = ensemble_average({dist({0.3, 0.7})});
  CHECK(singleton.probs[0] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("ensemble_average validates its inputs") {
  CHECK_THROWS_AS(ensemble_average({}), std::invalid_argument);
  CHECK_THROWS_AS(ensemble_average({dist({0.5, 0.5}), dist({1.0})}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ensemble_average({dist({0.9, 0.2})}),
                  std::invalid_argument);  // member not normalized
}

TEST_CASE("ensemble_vote takes the majority with low-index ties") {
  CHECK(ensemble_vote({dist({0.9, 0.1}), dist({0.2, 0.8}),
                       dist({0.3, 0.7})}) == 1);
  // One vote each: tie breaks to the lowest class index.
  CHECK(ensemble_vote({dist({0.9, 0.1}), dist({0.1, 0.9})}) == 0);
  CHECK_THROWS_AS(ensemble_vote({}), std::invalid_argument);
}

TEST_CASE("ensemble_predict averages per-template predictions") {
  const ComponentSet g = toy_grammar();
  const auto templates = enumerate_templates(g);
  REQUIRE(templates.size() == 4);

  // Script different class scores per template so members disagree.
  auto backend = std::make_shared<ScriptedBackend>();
  std::vector<LabelDistribution> expected_members;
  for (std::size_t t = 0; t < templates.size(); ++t) {
    const double s0 = -1.0 - 0.3 * static_cast<double>(t);
    const double s1 = -2.0 + 0.4 * static_cast<double>(t);
    for (int cls = 0; cls < 2; ++cls) {
      const RenderedPrompt p =
          render_direct(templates[t], {}, "test", cls, g);
      backend->add(p.prefix, p.continuation, cls == 0 ? s0 : s1);
    }
    expected_members.push_back(
        LabelDistribution{softmax({s0, s1}), Method::kDirect});
  }

  const LabelDistribution combined = ensemble_predict(
      *backend, templates, {}, "test", g, Method::kDirect, {"N/A"});
  const LabelDistribution expected = ensemble_average(expected_members);
  CHECK(combined.method == Method::kEnsemble);
  CHECK(combined.probs[0] == doctest::Approx(expected.probs[0]).epsilon(1e-12));
  CHECK(combined.probs[1] == doctest::Approx(expected.probs[1]).epsilon(1e-12));
}

TEST_CASE("ensemble_predict costs exactly one evaluation per template") {
  const ComponentSet g = toy_grammar();
  const auto templates = enumerate_templates(g);
  auto backend = std::make_shared<ScriptedBackend>();
  for (const Template& tpl : templates) {
    for (int cls = 0; cls < 2; ++cls) {
      const RenderedPrompt p = render_direct(tpl, {}, "test", cls, g);
      backend->add(p.prefix, p.continuation, -1.0);
    }
  }
  ensemble_predict(*backend, templates, {}, "test", g, Method::kDirect, {});
  // Direct prediction scores one continuation per class.
  CHECK(backend->calls() == templates.size() * 2);
}

TEST_CASE("ensemble_predict is invariant to template order") {
  const ComponentSet g = toy_grammar();
  auto templates = enumerate_templates(g);
  auto backend = std::make_shared<ScriptedBackend>();
  for (std::size_t t = 0; t < templates.size(); ++t) {
    for (int cls = 0; cls < 2; ++cls) {
      const RenderedPrompt p =
          render_direct(templates[t], {}, "test", cls, g);
      backend->add(p.prefix, p.continuation,
                   -1.0 - 0.1 * static_cast<double>(t + cls));
    }
  }
  const auto forward = ensemble_predict(*backend, templates, {}, "test", g,
                                        Method::kDirect, {});
  std::reverse(templates.begin(), templates.end());
  const auto backward = ensemble_predict(*backend, templates, {}, "test", g,
                                         Method::kDirect, {});
  CHECK(forward.probs[0] == backward.probs[0]);
  CHECK(forward.probs[1] == backward.probs[1]);
}

TEST_CASE("ensemble_predict rejects an empty template list") {
  const ComponentSet g = toy_grammar();
  ScriptedBackend backend;
  CHECK_THROWS_AS(
      ensemble_predict(backend, {}, {}, "test", g, Method::kDirect, {}),
      std::invalid_argument);
}
