#include "templens/ensemble.hpp"

#include <algorithm>
#include <stdexcept>

namespace templens {

LabelDistribution ensemble_average(
    const std::vector<LabelDistribution>& dists) {
  if (dists.empty()) {
    throw std::invalid_argument("ensemble_average: empty distribution list");
  }
  const std::size_t num_classes = dists.front().probs.size();
  LabelDistribution out;
  out.method = Method::kEnsemble;
  out.probs.assign(num_classes, 0.0);
  for (const LabelDistribution& dist : dists) {
    dist.validate();
    if (dist.probs.size() != num_classes) {
      throw std::invalid_argument(
          "ensemble_average: mismatched distribution lengths (" +
          std::to_string(dist.probs.size()) + " vs " +
          std::to_string(num_classes) + ")");
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
      out.probs[c] += dist.probs[c];
    }
  }
  for (double& p : out.probs) p /= static_cast<double>(dists.size());
  return out;
}

int ensemble_vote(const std::vector<LabelDistribution>& dists) {
  if (dists.empty()) {
    throw std::invalid_argument("ensemble_vote: empty distribution list");
  }
  const std::size_t num_classes = dists.front().probs.size();
  std::vector<int> tally(num_classes, 0);
  for (const LabelDistribution& dist : dists) {
    if (dist.probs.size() != num_classes) {
      throw std::invalid_argument(
          "ensemble_vote: mismatched distribution lengths");
    }
    ++tally[static_cast<std::size_t>(classify(dist))];
  }
  int best = 0;
  for (std::size_t c = 1; c < num_classes; ++c) {
    if (tally[c] > tally[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(c);
    }
  }
  return best;
}

LabelDistribution ensemble_predict(Backend& backend,
                                   const std::vector<Template>& templates,
                                   const std::vector<Demonstration>& demos,
                                   const std::string& test_text,
                                   const ComponentSet& grammar, Method method,
                                   const std::vector<std::string>& cf_tokens,
                                   std::int64_t example_id) {
  if (templates.empty()) {
    throw std::invalid_argument("ensemble_predict: empty template list");
  }
  // Join order is fixed by template id so the average is reproducible no
  // matter how members were computed.
  std::vector<const Template*> ordered;
  ordered.reserve(templates.size());
  for (const Template& tpl : templates) ordered.push_back(&tpl);
  std::sort(ordered.begin(), ordered.end(),
            [](const Template* a, const Template* b) { return a->id < b->id; });

  std::vector<LabelDistribution> members;
  members.reserve(ordered.size());
  for (const Template* tpl : ordered) {
    members.push_back(predict(method, backend, *tpl, demos, test_text, grammar,
                              cf_tokens, example_id));
  }
  return ensemble_average(members);
}

}  // namespace templens
