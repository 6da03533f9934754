#pragma once

// Template ensembles: run a base prediction method once per template and
// aggregate. Averaging the per-class probabilities is the primary
// aggregation; majority voting is kept as the documented alternative (it
// degrades on many-class tasks).

#include <vector>

#include "templens/predict.hpp"

namespace templens {

/// Element-wise arithmetic mean of the member distributions.
LabelDistribution ensemble_average(
    const std::vector<LabelDistribution>& dists);

/// Majority class over the members' argmax predictions; ties break to the
/// lowest class index.
int ensemble_vote(const std::vector<LabelDistribution>& dists);

/// Applies `method` once per template, then averages. Performs exactly
/// templates.size() base-method evaluations.
LabelDistribution ensemble_predict(Backend& backend,
                                   const std::vector<Template>& templates,
                                   const std::vector<Demonstration>& demos,
                                   const std::string& test_text,
                                   const ComponentSet& grammar, Method method,
                                   const std::vector<std::string>& cf_tokens,
                                   std::int64_t example_id = -1);

}  // namespace templens
