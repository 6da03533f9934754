#include "templens/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "templens/hashing.hpp"
#include "templens/remote.hpp"

namespace templens {
namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& text) {
  return std::stoull(text, nullptr, 16);
}

std::vector<Method> parse_methods(const nlohmann::json& node) {
  std::vector<Method> out;
  for (const auto& item : node) {
    out.push_back(method_from_string(item.get<std::string>()));
  }
  // Canonical order: direct, channel, calibration.
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <typename T>
std::vector<T> sorted_unique(std::vector<T> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

/// Configs built in code may list methods or seeds in any order; record
/// order and the config digest must not depend on it.
RunConfig normalized(RunConfig config) {
  config.methods = sorted_unique(config.methods);
  config.demo_seeds = sorted_unique(config.demo_seeds);
  if (config.template_ids) {
    config.template_ids = sorted_unique(*config.template_ids);
  }
  if (config.ensemble) {
    config.ensemble->seeds = sorted_unique(config.ensemble->seeds);
  }
  return config;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& doc) {
  RunConfig config;
  try {
    const auto& backend = doc.at("backend");
    config.backend.kind = backend.at("kind").get<std::string>();
    config.backend.params = backend;
    config.backend.params.erase("kind");

    config.dataset_path = doc.at("dataset").get<std::string>();
    config.grammar_path = doc.at("grammar").get<std::string>();
    config.n_shots = doc.value("n_shots", std::size_t{0});
    config.methods = parse_methods(doc.at("methods"));

    const auto& templates = doc.at("templates");
    if (templates.contains("ids")) {
      config.template_ids =
          sorted_unique(templates.at("ids").get<std::vector<std::uint64_t>>());
      config.templates_per_seed = config.template_ids->size();
    } else {
      config.templates_per_seed = templates.at("sample").get<std::size_t>();
    }

    if (doc.contains("demo_seeds")) {
      config.demo_seeds = sorted_unique(
          doc.at("demo_seeds").get<std::vector<std::int64_t>>());
    }
    if (doc.contains("demos_file")) {
      config.demos_file = doc.at("demos_file").get<std::string>();
    }
    if (doc.contains("cf_tokens")) {
      config.cf_tokens = doc.at("cf_tokens").get<std::vector<std::string>>();
    }
    if (doc.contains("ensemble")) {
      EnsembleConfig ensemble;
      ensemble.size = doc.at("ensemble").value("size", std::size_t{5});
      if (doc.at("ensemble").contains("seeds")) {
        ensemble.seeds = sorted_unique(
            doc.at("ensemble").at("seeds").get<std::vector<std::int64_t>>());
      }
      config.ensemble = ensemble;
    }
    if (doc.contains("eval_subset_size")) {
      config.eval_subset_size = doc.at("eval_subset_size").get<std::size_t>();
    }
    config.run_seed = doc.value("run_seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid run config: ") + e.what());
  }
  config.validate();
  return config;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json RunConfig::to_json() const {
  const RunConfig canonical = normalized(*this);
  nlohmann::json doc;
  doc["backend"] = canonical.backend.params;
  doc["backend"]["kind"] = canonical.backend.kind;
  doc["dataset"] = canonical.dataset_path.string();
  doc["grammar"] = canonical.grammar_path.string();
  doc["n_shots"] = canonical.n_shots;
  auto& methods_node = doc["methods"] = nlohmann::json::array();
  for (Method m : canonical.methods) methods_node.push_back(to_string(m));
  if (canonical.template_ids) {
    doc["templates"]["ids"] = *canonical.template_ids;
  } else {
    doc["templates"]["sample"] = canonical.templates_per_seed;
  }
  doc["demo_seeds"] = canonical.demo_seeds;
  if (demos_file) doc["demos_file"] = demos_file->string();
  doc["cf_tokens"] = cf_tokens;
  if (canonical.ensemble) {
    doc["ensemble"]["size"] = canonical.ensemble->size;
    doc["ensemble"]["seeds"] = canonical.ensemble->seeds;
  }
  if (eval_subset_size) doc["eval_subset_size"] = *eval_subset_size;
  doc["run_seed"] = run_seed;
  return doc;
}

std::uint64_t RunConfig::digest() const {
  return mix64(fnv1a64(to_json().dump()));
}

void RunConfig::validate() const {
  if (methods.empty()) {
    throw ConfigError("config: methods must be non-empty");
  }
  if (templates_per_seed == 0) {
    throw ConfigError("config: template count must be positive");
  }
  if (demo_seeds.empty() && !demos_file) {
    throw ConfigError("config: demo_seeds is empty and no demos_file given");
  }
  if (cf_tokens.empty() &&
      std::find(methods.begin(), methods.end(), Method::kCalibration) !=
          methods.end()) {
    throw ConfigError("config: calibration requires at least one cf_token");
  }
  if (ensemble && (ensemble->size == 0 || ensemble->seeds.empty())) {
    throw ConfigError("config: ensemble needs a positive size and seeds");
  }
}

std::string RunRecord::to_json_line() const {
  nlohmann::json doc;
  doc["run_id"] = run_id;
  doc["backend"] = backend_id;
  doc["dataset_digest"] = hex64(dataset_digest);
  doc["method"] = method;
  doc["demo_seed"] = demo_seed;
  doc["template_id"] = template_id;
  if (!pool.empty()) doc["pool"] = pool;
  doc["example_id"] = example_id;
  doc["gold"] = gold;
  doc["predicted"] = predicted;
  doc["probs"] = probs;
  if (adjusted) doc["adjusted"] = true;
  if (!error.empty()) doc["error"] = error;
  return doc.dump();
}

RunRecord RunRecord::from_json_line(const std::string& line) {
  RunRecord record;
  const auto doc = nlohmann::json::parse(line);
  record.run_id = doc.at("run_id").get<std::string>();
  record.backend_id = doc.at("backend").get<std::string>();
  record.dataset_digest = parse_hex64(doc.at("dataset_digest").get<std::string>());
  record.method = doc.at("method").get<std::string>();
  record.demo_seed = doc.at("demo_seed").get<std::int64_t>();
  record.template_id = doc.at("template_id").get<std::int64_t>();
  if (doc.contains("pool")) {
    record.pool = doc.at("pool").get<std::vector<std::uint64_t>>();
  }
  record.example_id = doc.at("example_id").get<std::int64_t>();
  record.gold = doc.at("gold").get<int>();
  record.predicted = doc.at("predicted").get<int>();
  record.probs = doc.at("probs").get<std::vector<double>>();
  record.adjusted = doc.value("adjusted", false);
  record.error = doc.value("error", std::string{});
  if (record.error.empty()) {
    LabelDistribution dist{record.probs, Method::kDirect};
    dist.validate();
    if (classify(dist) != record.predicted) {
      throw ConfigError("record for example " +
                        std::to_string(record.example_id) +
                        ": predicted class does not match argmax(probs)");
    }
  }
  return record;
}

std::vector<RunRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open records file: " + path.string());
  }
  std::vector<RunRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(RunRecord::from_json_line(line));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + " line " + std::to_string(line_no) +
                        ": " + e.what());
    }
  }
  return records;
}

void write_records(const std::vector<RunRecord>& records,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot open records file for writing: " +
                      path.string());
  }
  for (const RunRecord& record : records) {
    out << record.to_json_line() << '\n';
  }
}

bool BoundaryRetryBackend::was_adjusted(std::int64_t template_id,
                                        std::int64_t example_id) const {
  std::lock_guard lock(mutex_);
  return adjusted_.count({template_id, example_id}) > 0;
}

double BoundaryRetryBackend::do_score(const ScoreRequest& request) {
  try {
    return inner_->score(request);
  } catch (const BoundaryConflictError&) {
    if (request.continuation.size() < 2 || request.continuation.front() != ' ') {
      throw;
    }
    ScoreRequest shifted = request;
    shifted.prefix.push_back(' ');
    shifted.continuation.erase(0, 1);
    const double value = inner_->score(shifted);
    {
      std::lock_guard lock(mutex_);
      adjusted_.insert({request.meta.template_id, request.meta.example_id});
    }
    return value;
  }
}

BackendPtr make_backend(const BackendSpec& spec, const Dataset& dataset) {
  if (spec.kind == "hash-mock") {
    return std::make_shared<HashMockBackend>();
  }
  if (spec.kind == "planted") {
    PlantedBackend::Params params;
    params.signal = spec.params.value("signal", params.signal);
    params.bias_amplitude =
        spec.params.value("bias_amplitude", params.bias_amplitude);
    params.noise = spec.params.value("noise", params.noise);
    params.bias_seed = spec.params.value("bias_seed", params.bias_seed);
    std::vector<int> golds;
    golds.reserve(dataset.size());
    for (const Example& example : dataset.examples) {
      golds.push_back(example.label);
    }
    return std::make_shared<PlantedBackend>(params, std::move(golds));
  }
  if (spec.kind == "scripted") {
    return ScriptedBackend::from_file(
        spec.params.at("table").get<std::string>());
  }
  if (spec.kind == "remote") {
    RemoteConfig config;
    config.endpoint = spec.params.at("endpoint").get<std::string>();
    config.model = spec.params.value("model", std::string{});
    config.api_key_env = spec.params.value("api_key_env", config.api_key_env);
    config.max_retries = spec.params.value("max_retries", config.max_retries);
    config.max_in_flight =
        spec.params.value("max_in_flight", config.max_in_flight);
    config.timeout_seconds =
        spec.params.value("timeout_seconds", config.timeout_seconds);
    return std::make_shared<RemoteBackend>(std::move(config));
  }
  throw ConfigError("unknown backend kind: " + spec.kind);
}

namespace {

/// One unit of evaluation work in canonical order.
struct Cell {
  Method method;
  bool is_ensemble = false;
  std::int64_t seed = 0;         // demo seed, or ensemble seed
  std::size_t template_slot = 0; // index into the seed's template list
  std::size_t example_index = 0; // index into eval_indices
};

struct Plan {
  std::vector<std::size_t> eval_indices;  // ascending dataset indices
  // Per demo seed (base runs) and per ensemble seed (ensemble runs).
  std::map<std::int64_t, DemonstrationSet> demos;
  std::map<std::int64_t, std::vector<Template>> templates;  // sorted by id
  std::map<std::int64_t, DemonstrationSet> ensemble_demos;
  std::map<std::int64_t, std::vector<Template>> ensemble_pools;
  std::vector<Cell> cells;
};

std::vector<Template> templates_for_seed(const RunConfig& config,
                                         const ComponentSet& grammar,
                                         std::uint64_t stream) {
  std::vector<Template> out;
  if (config.template_ids) {
    out.reserve(config.template_ids->size());
    for (std::uint64_t id : *config.template_ids) {
      out.push_back(decode_template(grammar, id));
    }
  } else {
    out = sample_templates(grammar, config.templates_per_seed, stream);
  }
  std::sort(out.begin(), out.end(),
            [](const Template& a, const Template& b) { return a.id < b.id; });
  return out;
}

DemonstrationSet demos_for_seed(const RunConfig& config,
                                const Dataset& dataset,
                                const ComponentSet& grammar,
                                std::int64_t seed) {
  if (config.demos_file) {
    return load_demonstrations(*config.demos_file, grammar.num_classes());
  }
  return select_random(dataset, config.n_shots,
                       named_stream(config.run_seed, "demos",
                                    static_cast<std::uint64_t>(seed)));
}

Plan build_plan(const RunConfig& config, const Dataset& dataset,
                const ComponentSet& grammar, const RunOptions& options) {
  Plan plan;

  plan.eval_indices.resize(dataset.size());
  std::iota(plan.eval_indices.begin(), plan.eval_indices.end(), 0);
  if (config.eval_subset_size &&
      *config.eval_subset_size < dataset.size()) {
    SplitMix64 rng(named_stream(config.run_seed, "eval_subset"));
    const std::size_t target = *config.eval_subset_size;
    for (std::size_t i = 0; i < target; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(
          rng.next_below(plan.eval_indices.size() - i));
      std::swap(plan.eval_indices[i], plan.eval_indices[j]);
    }
    plan.eval_indices.resize(target);
    std::sort(plan.eval_indices.begin(), plan.eval_indices.end());
  }

  const std::vector<std::int64_t> demo_seeds =
      config.demos_file ? std::vector<std::int64_t>{DemonstrationSet::kExternalSeed}
                        : config.demo_seeds;

  if (!options.ensemble_only) {
    for (std::int64_t seed : demo_seeds) {
      plan.demos[seed] = demos_for_seed(config, dataset, grammar, seed);
      plan.templates[seed] = templates_for_seed(
          config, grammar,
          named_stream(config.run_seed, "templates",
                       static_cast<std::uint64_t>(seed)));
    }
  }
  if (config.ensemble) {
    for (std::int64_t seed : config.ensemble->seeds) {
      plan.ensemble_demos[seed] =
          demos_for_seed(config, dataset, grammar, seed);
      std::vector<Template> pool = sample_templates(
          grammar, config.ensemble->size,
          named_stream(config.run_seed, "ensemble",
                       static_cast<std::uint64_t>(seed)));
      std::sort(pool.begin(), pool.end(),
                [](const Template& a, const Template& b) {
                  return a.id < b.id;
                });
      plan.ensemble_pools[seed] = std::move(pool);
    }
  }

  // Canonical cell order: (method, demo_seed, template_id, example_id),
  // then ensemble cells in (method, ensemble_seed, example_id) order.
  for (Method method : config.methods) {
    if (options.ensemble_only) break;
    for (std::int64_t seed : demo_seeds) {
      const std::size_t n_templates = plan.templates.at(seed).size();
      for (std::size_t t = 0; t < n_templates; ++t) {
        for (std::size_t e = 0; e < plan.eval_indices.size(); ++e) {
          plan.cells.push_back(Cell{method, false, seed, t, e});
        }
      }
    }
  }
  if (config.ensemble) {
    for (Method method : config.methods) {
      for (std::int64_t seed : config.ensemble->seeds) {
        for (std::size_t e = 0; e < plan.eval_indices.size(); ++e) {
          plan.cells.push_back(Cell{method, true, seed, 0, e});
        }
      }
    }
  }
  return plan;
}

}  // namespace

RunOutput run_evaluation(const RunConfig& config, const RunOptions& options) {
  const ComponentSet grammar = load_grammar(config.grammar_path);
  const Dataset dataset =
      load_dataset(config.dataset_path, grammar.num_classes());
  return run_evaluation(config, options, dataset, grammar,
                        make_backend(config.backend, dataset));
}

RunOutput run_evaluation(const RunConfig& raw_config,
                         const RunOptions& options, const Dataset& dataset,
                         const ComponentSet& grammar, BackendPtr backend) {
  const RunConfig config = normalized(raw_config);
  config.validate();
  grammar.validate();
  const auto started = std::chrono::steady_clock::now();

  BackendPtr scored = backend;
  if (options.cache) {
    scored = std::make_shared<CachedBackend>(scored, options.cache);
  }
  auto retry = std::make_shared<BoundaryRetryBackend>(scored);

  const Plan plan = build_plan(config, dataset, grammar, options);
  const std::string run_id = hex64(config.digest());

  std::vector<RunRecord> records(plan.cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_failure;
  std::mutex failure_mutex;

  auto evaluate = [&](const Cell& cell) {
    const std::size_t dataset_index = plan.eval_indices[cell.example_index];
    const Example& example = dataset.examples[dataset_index];
    const DemonstrationSet& demos = cell.is_ensemble
                                        ? plan.ensemble_demos.at(cell.seed)
                                        : plan.demos.at(cell.seed);

    RunRecord record;
    record.run_id = run_id;
    record.backend_id = retry->id();
    record.dataset_digest = dataset.digest;
    record.method = cell.is_ensemble ? "ensemble:" + to_string(cell.method)
                                     : to_string(cell.method);
    record.demo_seed = demos.source == DemonstrationSet::Source::kFile
                           ? DemonstrationSet::kExternalSeed
                           : cell.seed;
    record.example_id = static_cast<std::int64_t>(dataset_index);
    record.gold = example.label;

    const auto cell_start = std::chrono::steady_clock::now();
    try {
      LabelDistribution dist;
      if (cell.is_ensemble) {
        const std::vector<Template>& pool = plan.ensemble_pools.at(cell.seed);
        record.template_id = -1;
        for (const Template& tpl : pool) record.pool.push_back(tpl.id);
        dist = ensemble_predict(*retry, pool, demos.demos, example.text,
                                grammar, cell.method, config.cf_tokens,
                                record.example_id);
        dist.method = Method::kEnsemble;
      } else {
        const Template& tpl = plan.templates.at(cell.seed)[cell.template_slot];
        record.template_id = static_cast<std::int64_t>(tpl.id);
        dist = predict(cell.method, *retry, tpl, demos.demos, example.text,
                       grammar, config.cf_tokens, record.example_id);
      }
      dist.validate();
      record.probs = dist.probs;
      record.predicted = classify(dist);
      if (cell.is_ensemble) {
        for (std::uint64_t tid : record.pool) {
          record.adjusted = record.adjusted ||
                            retry->was_adjusted(static_cast<std::int64_t>(tid),
                                                record.example_id);
        }
      } else {
        record.adjusted =
            retry->was_adjusted(record.template_id, record.example_id);
      }
    } catch (const std::exception& e) {
      record.error = e.what();
      record.predicted = -1;
      std::lock_guard lock(failure_mutex);
      failed.store(true);
      if (first_failure.empty()) first_failure = e.what();
    }
    record.elapsed_ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - cell_start)
            .count();
    return record;
  };

  const int workers = std::max(1, options.workers);
  if (workers == 1) {
    for (std::size_t i = 0; i < plan.cells.size(); ++i) {
      records[i] = evaluate(plan.cells[i]);
    }
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= plan.cells.size()) return;
          records[i] = evaluate(plan.cells[i]);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  RunOutput output;
  output.records = std::move(records);
  output.backend_calls = backend->calls();

  output.manifest["config"] = config.to_json();
  output.manifest["config_digest"] = run_id;
  output.manifest["dataset_digest"] = hex64(dataset.digest);
  output.manifest["backend_id"] = retry->id();
  output.manifest["record_count"] = output.records.size();
  output.manifest["eval_indices"] = plan.eval_indices;
  output.manifest["backend_calls"] = output.backend_calls;
  output.manifest["failed_cells"] =
      std::count_if(output.records.begin(), output.records.end(),
                    [](const RunRecord& r) { return !r.error.empty(); });
  output.manifest["elapsed_ms"] =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - started)
          .count();
  return output;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records,
                                  const std::vector<std::string>& group_by) {
  for (const std::string& dim : group_by) {
    if (dim != "method" && dim != "demo_seed" && dim != "template_id" &&
        dim != "backend" && dim != "dataset") {
      throw ConfigError("summarize: unknown group-by dimension \"" + dim +
                        "\"");
    }
  }

  auto group_key = [&](const RunRecord& record) {
    std::string key;
    for (const std::string& dim : group_by) {
      if (!key.empty()) key += ",";
      if (dim == "method") key += "method=" + record.method;
      if (dim == "demo_seed")
        key += "demo_seed=" + std::to_string(record.demo_seed);
      if (dim == "template_id")
        key += "template_id=" + std::to_string(record.template_id);
      if (dim == "backend") key += "backend=" + record.backend_id;
      if (dim == "dataset") key += "dataset=" + hex64(record.dataset_digest);
    }
    if (key.empty()) key = "all";
    return key;
  };

  // Cell identity is always the full (method, seed, template) triple;
  // group_by only controls how cells are pooled afterwards.
  struct CellData {
    std::vector<int> predictions;
    std::vector<int> golds;
  };
  std::map<std::string, std::map<std::string, CellData>> groups;
  for (const RunRecord& record : records) {
    if (!record.error.empty()) continue;
    const std::string cell_key = record.method + "/" +
                                 std::to_string(record.demo_seed) + "/" +
                                 std::to_string(record.template_id);
    CellData& cell = groups[group_key(record)][cell_key];
    cell.predictions.push_back(record.predicted);
    cell.golds.push_back(record.gold);
  }
  if (groups.empty()) {
    throw MetricError("summarize: no usable records");
  }

  std::vector<SummaryRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, cells] : groups) {
    std::vector<double> cell_scores;
    cell_scores.reserve(cells.size());
    for (const auto& [cell_key, cell] : cells) {
      cell_scores.push_back(accuracy(cell.predictions, cell.golds));
    }
    const Aggregate stats = aggregate(cell_scores);
    rows.push_back(SummaryRow{key, stats.mean, stats.stddev, stats.n});
  }
  return rows;
}

std::vector<TemplateScore> template_scores(
    const std::vector<RunRecord>& records) {
  std::map<std::int64_t, std::pair<std::vector<int>, std::vector<int>>> pooled;
  for (const RunRecord& record : records) {
    if (!record.error.empty() || record.template_id < 0) continue;
    auto& [predictions, golds] = pooled[record.template_id];
    predictions.push_back(record.predicted);
    golds.push_back(record.gold);
  }
  std::vector<TemplateScore> out;
  out.reserve(pooled.size());
  for (const auto& [template_id, data] : pooled) {
    out.push_back(
        TemplateScore{static_cast<std::uint64_t>(template_id),
                      accuracy(data.first, data.second)});
  }
  return out;
}

}  // namespace templens
