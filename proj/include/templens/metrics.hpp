#pragma once

// Analysis quantities: accuracy aggregation, top-k template sets, Jaccard
// overlap, Spearman rank correlation, rank-decay curves, win counting and
// per-component score breakdowns.

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "templens/grammar.hpp"

namespace templens {

struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TemplateScore {
  std::uint64_t template_id = 0;
  double score = 0.0;  // classification accuracy in [0, 1]
};

/// Fraction of exact matches between predictions and golds.
double accuracy(const std::vector<int>& predictions,
                const std::vector<int>& golds);

/// Arithmetic mean and sample (n-1) standard deviation. A single sample
/// yields std 0 by convention; `n` records the degenerate case.
struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;
};
Aggregate aggregate(const std::vector<double>& scores);

/// Ids of the k highest-scoring templates. Boundary ties break by ascending
/// template id so independently produced runs cut identically.
std::set<std::uint64_t> top_k(const std::vector<TemplateScore>& scores,
                              std::size_t k);

/// Jaccard coefficient |a∩b| / |a∪b|; undefined when both sets are empty.
double iou(const std::set<std::uint64_t>& a, const std::set<std::uint64_t>& b);

/// Spearman rank correlation with mean ranks for ties, computed as the
/// Pearson correlation of the rank vectors. Errors on zero rank variance.
double spearman(const std::vector<double>& scores_a,
                const std::vector<double>& scores_b);

/// Scores sorted descending and normalized by the best; element 0 is 1.
std::vector<double> rank_curve(const std::vector<TemplateScore>& scores);

/// Positions where few_shot strictly exceeds zero_shot; ties are not wins.
struct WinCount {
  std::size_t wins = 0;
  std::size_t total = 0;
};
WinCount count_wins(const std::vector<double>& zero_shot,
                    const std::vector<double>& few_shot);

/// Scores grouped by the fixed variant of one template component.
struct ComponentGroup {
  std::size_t variant_index = 0;
  std::string variant;
  std::vector<double> scores;
  Aggregate stats;
};

inline constexpr std::array<const char*, 4> kComponentDimensions = {
    "input_verbalizer", "output_verbalizer", "intra_separator",
    "inter_separator"};

/// For each of the four component dimensions, groups the (template, score)
/// results by that dimension's variant. Every result lands in exactly one
/// group per dimension; variants never used are omitted.
std::array<std::vector<ComponentGroup>, 4> component_breakdown(
    const std::vector<std::pair<Template, double>>& results,
    const ComponentSet& grammar);

}  // namespace templens
