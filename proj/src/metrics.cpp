#include "templens/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace templens {

double accuracy(const std::vector<int>& predictions,
                const std::vector<int>& golds) {
  if (predictions.size() != golds.size()) {
    throw MetricError("accuracy: length mismatch (" +
                      std::to_string(predictions.size()) + " vs " +
                      std::to_string(golds.size()) + ")");
  }
  if (predictions.empty()) {
    throw MetricError("accuracy: empty input");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == golds[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

Aggregate aggregate(const std::vector<double>& scores) {
  if (scores.empty()) {
    throw MetricError("aggregate: empty score list");
  }
  Aggregate out;
  out.n = scores.size();
  // A constant list must yield its value and an exact zero spread; the
  // summation path would leave rounding residue (e.g. three 0.3s).
  if (std::all_of(scores.begin(), scores.end(),
                  [&](double s) { return s == scores.front(); })) {
    out.mean = scores.front();
    return out;
  }
  out.mean = std::accumulate(scores.begin(), scores.end(), 0.0) /
             static_cast<double>(scores.size());
  if (scores.size() > 1) {
    double ss = 0.0;
    for (double s : scores) ss += (s - out.mean) * (s - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(scores.size() - 1));
  }
  return out;
}

std::set<std::uint64_t> top_k(const std::vector<TemplateScore>& scores,
                              std::size_t k) {
  if (k > scores.size()) {
    throw MetricError("top_k: k=" + std::to_string(k) + " exceeds " +
                      std::to_string(scores.size()) + " scores");
  }
  std::set<std::uint64_t> seen;
  for (const TemplateScore& s : scores) {
    if (!seen.insert(s.template_id).second) {
      throw MetricError("top_k: duplicate template id " +
                        std::to_string(s.template_id));
    }
  }
  std::vector<TemplateScore> sorted(scores);
  std::sort(sorted.begin(), sorted.end(),
            [](const TemplateScore& a, const TemplateScore& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.template_id < b.template_id;
            });
  std::set<std::uint64_t> out;
  for (std::size_t i = 0; i < k; ++i) out.insert(sorted[i].template_id);
  return out;
}

double iou(const std::set<std::uint64_t>& a,
           const std::set<std::uint64_t>& b) {
  if (a.empty() && b.empty()) {
    throw MetricError("iou: undefined for two empty sets");
  }
  std::size_t intersection = 0;
  for (std::uint64_t id : a) {
    if (b.count(id)) ++intersection;
  }
  const std::size_t union_size = a.size() + b.size() - intersection;
  return static_cast<double>(intersection) / static_cast<double>(union_size);
}

namespace {

/// Mean ranks (1-based) with ties sharing the average of their positions.
std::vector<double> mean_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = shared;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) {
    throw MetricError("spearman: zero rank variance (all values tied)");
  }
  return cov / std::sqrt(var_a * var_b);
}

}  // namespace

double spearman(const std::vector<double>& scores_a,
                const std::vector<double>& scores_b) {
  if (scores_a.size() != scores_b.size()) {
    throw MetricError("spearman: length mismatch");
  }
  if (scores_a.size() < 2) {
    throw MetricError("spearman: needs at least two paired scores");
  }
  return pearson(mean_ranks(scores_a), mean_ranks(scores_b));
}

std::vector<double> rank_curve(const std::vector<TemplateScore>& scores) {
  if (scores.empty()) {
    throw MetricError("rank_curve: empty score list");
  }
  std::vector<double> sorted;
  sorted.reserve(scores.size());
  for (const TemplateScore& s : scores) sorted.push_back(s.score);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double best = sorted.front();
  if (best == 0.0) {
    throw MetricError("rank_curve: best score is zero");
  }
  for (double& s : sorted) s /= best;
  return sorted;
}

WinCount count_wins(const std::vector<double>& zero_shot,
                    const std::vector<double>& few_shot) {
  if (zero_shot.size() != few_shot.size()) {
    throw MetricError("count_wins: length mismatch");
  }
  WinCount out;
  out.total = zero_shot.size();
  for (std::size_t i = 0; i < zero_shot.size(); ++i) {
    if (few_shot[i] > zero_shot[i]) ++out.wins;
  }
  return out;
}

std::array<std::vector<ComponentGroup>, 4> component_breakdown(
    const std::vector<std::pair<Template, double>>& results,
    const ComponentSet& grammar) {
  const std::array<const std::vector<std::string>*, 4> options = {
      &grammar.input_verbalizers, &grammar.output_verbalizers,
      &grammar.intra_separators, &grammar.inter_separators};

  std::array<std::map<std::size_t, std::vector<double>>, 4> grouped;
  for (const auto& [tpl, score] : results) {
    // Validates membership and id consistency in one pass.
    if (decode_template(grammar, tpl.id) != tpl) {
      throw GrammarError("component_breakdown: template id " +
                         std::to_string(tpl.id) +
                         " does not belong to grammar \"" +
                         grammar.task_name + "\"");
    }
    const std::array<std::string const*, 4> fields = {
        &tpl.input_verbalizer, &tpl.output_verbalizer, &tpl.intra_separator,
        &tpl.inter_separator};
    for (std::size_t dim = 0; dim < 4; ++dim) {
      const std::size_t variant = component_index(
          *options[dim], *fields[dim], kComponentDimensions[dim]);
      grouped[dim][variant].push_back(score);
    }
  }

  std::array<std::vector<ComponentGroup>, 4> out;
  for (std::size_t dim = 0; dim < 4; ++dim) {
    for (const auto& [variant, scores] : grouped[dim]) {
      ComponentGroup group;
      group.variant_index = variant;
      group.variant = (*options[dim])[variant];
      group.scores = scores;
      group.stats = aggregate(scores);
      out[dim].push_back(std::move(group));
    }
  }
  return out;
}

}  // namespace templens
