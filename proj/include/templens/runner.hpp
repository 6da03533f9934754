#pragma once

// Evaluation orchestration: expands a run configuration into the full
// (method x demo seed x template x example) grid, evaluates cells with a
// worker pool, and persists records in a canonical order that does not
// depend on execution parallelism.

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "templens/cache.hpp"
#include "templens/dataset.hpp"
#include "templens/ensemble.hpp"
#include "templens/metrics.hpp"
#include "templens/select.hpp"

namespace templens {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Backend description as it appears in a run config.
struct BackendSpec {
  std::string kind;  // hash-mock | planted | scripted | remote
  nlohmann::json params = nlohmann::json::object();
};

struct EnsembleConfig {
  std::size_t size = 5;                          // templates per ensemble
  std::vector<std::int64_t> seeds = {0, 1, 2, 3, 4};
};

struct RunConfig {
  BackendSpec backend;
  std::filesystem::path dataset_path;
  std::filesystem::path grammar_path;
  std::size_t n_shots = 0;
  std::vector<Method> methods;
  // Template source: either `sample` per demo seed or an explicit id list.
  std::size_t templates_per_seed = 10;
  std::optional<std::vector<std::uint64_t>> template_ids;
  std::vector<std::int64_t> demo_seeds = {0, 1, 2};
  std::optional<std::filesystem::path> demos_file;  // external selections
  std::vector<std::string> cf_tokens = {"N/A"};
  std::optional<EnsembleConfig> ensemble;
  std::optional<std::size_t> eval_subset_size;
  std::uint64_t run_seed = 0;

  static RunConfig from_json(const nlohmann::json& doc);
  static RunConfig from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Hash of the canonical JSON form; doubles as the run id.
  std::uint64_t digest() const;

  void validate() const;
};

/// One persisted prediction outcome.
struct RunRecord {
  std::string run_id;
  std::string backend_id;
  std::uint64_t dataset_digest = 0;
  std::string method;
  std::int64_t demo_seed = 0;    // -1 when demos came from a file
  std::int64_t template_id = 0;  // -1 for ensemble records
  std::vector<std::uint64_t> pool;  // ensemble member template ids
  std::int64_t example_id = 0;
  int gold = 0;
  int predicted = -1;
  std::vector<double> probs;
  bool adjusted = false;  // boundary space shift was applied
  std::string error;      // non-empty marks a failed cell
  double elapsed_ms = 0.0;  // in-memory only; not serialized (see manifest)

  std::string to_json_line() const;
  static RunRecord from_json_line(const std::string& line);
};

std::vector<RunRecord> load_records(const std::filesystem::path& path);
void write_records(const std::vector<RunRecord>& records,
                   const std::filesystem::path& path);

/// Retry decorator implementing the boundary-space rule: when a token
/// straddles the prefix end and the continuation begins with a space, the
/// space moves to the prefix and the request is retried once. Adjusted
/// (template, example) pairs are recorded for the run records.
class BoundaryRetryBackend : public Backend {
 public:
  explicit BoundaryRetryBackend(BackendPtr inner) : inner_(std::move(inner)) {}

  std::string id() const override { return inner_->id(); }
  bool meta_sensitive() const override { return inner_->meta_sensitive(); }

  bool was_adjusted(std::int64_t template_id, std::int64_t example_id) const;

 protected:
  double do_score(const ScoreRequest& request) override;

 private:
  BackendPtr inner_;
  mutable std::mutex mutex_;
  std::set<std::pair<std::int64_t, std::int64_t>> adjusted_;
};

/// Builds the scoring backend described by a config. Planted backends take
/// their gold labels from the dataset.
BackendPtr make_backend(const BackendSpec& spec, const Dataset& dataset);

struct RunOptions {
  int workers = 1;
  std::shared_ptr<ScoreCache> cache;  // optional; enables resumability
  bool ensemble_only = false;         // skip single-template records
};

struct RunOutput {
  std::vector<RunRecord> records;   // canonical order
  nlohmann::json manifest;
  std::uint64_t backend_calls = 0;  // scores actually computed
};

RunOutput run_evaluation(const RunConfig& config, const RunOptions& options);

/// Same, with a caller-supplied backend (tests inject counters/mocks).
RunOutput run_evaluation(const RunConfig& config, const RunOptions& options,
                         const Dataset& dataset, const ComponentSet& grammar,
                         BackendPtr backend);

/// Per-group accuracy summary: records are grouped by the requested
/// dimensions, accuracy is computed per (method, demo seed, template) cell,
/// then aggregated across the group's cells.
struct SummaryRow {
  std::string group;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;  // number of cells aggregated
};

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records,
                                  const std::vector<std::string>& group_by);

/// Per-template accuracy over a record set, pooled across demo seeds.
/// Ensemble and failed records are excluded.
std::vector<TemplateScore> template_scores(
    const std::vector<RunRecord>& records);

}  // namespace templens
