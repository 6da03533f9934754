// templens command-line interface.
//
// Subcommands cover the full workflow: template enumeration/sampling,
// prompt rendering, evaluation runs, ensembles, summaries, and the
// transfer/sensitivity analyses over persisted record files.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "templens/cache.hpp"
#include "templens/ensemble.hpp"
#include "templens/metrics.hpp"
#include "templens/runner.hpp"
#include "templens/select.hpp"

namespace {

using namespace templens;

/// Makes separators visible: newlines and tabs are escaped, everything
/// else passes through verbatim.
std::string escape_visible(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open output file: " + path);
  }
  return out;
}

/// Scores per template for one record file; errors if the file has no
/// usable single-template records.
std::vector<TemplateScore> scores_from_file(const std::string& path) {
  const auto scores = template_scores(load_records(path));
  if (scores.empty()) {
    throw std::runtime_error(path + ": no single-template records");
  }
  return scores;
}

int cmd_templates(const std::string& grammar_path, std::uint64_t sample,
                  std::uint64_t seed, bool count_only) {
  const ComponentSet grammar = load_grammar(grammar_path);
  if (count_only) {
    std::cout << grammar.template_count() << "\n";
    return 0;
  }
  const std::vector<Template> templates =
      sample > 0 ? sample_templates(grammar, sample, seed)
                 : enumerate_templates(grammar);
  for (const Template& tpl : templates) {
    std::cout << tpl.id << "\t" << escape_visible(tpl.input_verbalizer)
              << "\t" << escape_visible(tpl.output_verbalizer) << "\t"
              << escape_visible(tpl.intra_separator) << "\t"
              << escape_visible(tpl.inter_separator) << "\n";
  }
  return 0;
}

int cmd_render(const std::string& grammar_path, std::uint64_t template_id,
               const std::string& mode_name, const std::string& demos_path,
               const std::string& test_text, int class_index) {
  const ComponentSet grammar = load_grammar(grammar_path);
  const Template tpl = decode_template(grammar, template_id);
  std::vector<Demonstration> demos;
  if (!demos_path.empty()) {
    demos = load_demonstrations(demos_path, grammar.num_classes()).demos;
  }

  const Mode mode = mode_from_string(mode_name);
  auto render_one = [&](int cls) {
    switch (mode) {
      case Mode::kDirect:
        return render_direct(tpl, demos, test_text, cls, grammar);
      case Mode::kChannel:
        return render_channel(tpl, demos, test_text, cls, grammar);
      case Mode::kContentFree:
        return render_content_free(tpl, demos, test_text, cls, grammar);
    }
    throw std::logic_error("unhandled mode");
  };

  const bool all_classes = class_index < 0;
  const int first = all_classes ? 0 : class_index;
  const int last = all_classes ? grammar.num_classes() : class_index + 1;
  for (int cls = first; cls < last; ++cls) {
    const RenderedPrompt prompt = render_one(cls);
    std::cout << "class " << cls << " (" << grammar.label_words[cls] << ")\n"
              << "  prefix       |" << escape_visible(prompt.prefix) << "|\n"
              << "  continuation |" << escape_visible(prompt.continuation)
              << "|\n";
  }
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_path,
            const std::string& manifest_path, const std::string& cache_path,
            int workers, const std::string& endpoint, bool ensemble_only) {
  RunConfig config = RunConfig::from_file(config_path);
  if (!endpoint.empty()) {
    config.backend.params["endpoint"] = endpoint;
  }

  RunOptions options;
  options.workers = workers;
  options.ensemble_only = ensemble_only;
  if (!cache_path.empty()) {
    options.cache = std::make_shared<ScoreCache>(cache_path);
  }

  const RunOutput output = run_evaluation(config, options);
  write_records(output.records, out_path);
  if (!manifest_path.empty()) {
    open_output(manifest_path) << output.manifest.dump(2) << "\n";
  }

  const auto failed = output.manifest.at("failed_cells").get<std::size_t>();
  std::cerr << output.records.size() << " records (" << failed
            << " failed), " << output.backend_calls
            << " backend calls -> " << out_path << "\n";
  return failed == 0 ? 0 : 1;
}

int cmd_summarize(const std::string& records_path,
                  const std::vector<std::string>& group_by,
                  const std::string& csv_path) {
  const auto records = load_records(records_path);
  const auto rows = summarize(records, group_by);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!csv_path.empty()) {
    file = open_output(csv_path);
    out = &file;
  }
  *out << "group,mean,std,n\n";
  for (const SummaryRow& row : rows) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%zu", row.mean, row.stddev,
                  row.n);
    *out << csv_quote(row.group) << buf << "\n";
  }
  return 0;
}

int cmd_analyze_transfer(const std::vector<std::string>& record_files,
                         std::size_t k, const std::string& csv_path) {
  if (record_files.size() < 2) {
    throw std::runtime_error("analyze-transfer needs at least two record files");
  }
  std::vector<std::vector<TemplateScore>> runs;
  runs.reserve(record_files.size());
  for (const std::string& path : record_files) {
    runs.push_back(scores_from_file(path));
  }

  // Pairwise IoU over top-k sets and Spearman rho over the shared
  // templates, emitted as heatmap-ready rows.
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!csv_path.empty()) {
    file = open_output(csv_path);
    out = &file;
  }
  *out << "run_a,run_b,iou_top" << k << ",spearman\n";
  for (std::size_t a = 0; a < runs.size(); ++a) {
    for (std::size_t b = 0; b < runs.size(); ++b) {
      std::map<std::uint64_t, double> by_id_a, by_id_b;
      for (const TemplateScore& s : runs[a]) by_id_a[s.template_id] = s.score;
      for (const TemplateScore& s : runs[b]) by_id_b[s.template_id] = s.score;
      std::vector<double> shared_a, shared_b;
      for (const auto& [id, score] : by_id_a) {
        auto it = by_id_b.find(id);
        if (it != by_id_b.end()) {
          shared_a.push_back(score);
          shared_b.push_back(it->second);
        }
      }
      const double overlap =
          iou(top_k(runs[a], std::min(k, runs[a].size())),
              top_k(runs[b], std::min(k, runs[b].size())));
      std::string rho = "nan";
      if (shared_a.size() >= 2) {
        try {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.6f",
                        spearman(shared_a, shared_b));
          rho = buf;
        } catch (const MetricError&) {
          // zero rank variance; leave as nan
        }
      }
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", overlap);
      *out << csv_quote(record_files[a]) << "," << csv_quote(record_files[b])
           << "," << buf << "," << rho << "\n";
    }
  }
  return 0;
}

int cmd_analyze_components(const std::string& records_path,
                           const std::string& grammar_path,
                           const std::string& csv_path) {
  const ComponentSet grammar = load_grammar(grammar_path);
  const auto scores = scores_from_file(records_path);

  std::vector<std::pair<Template, double>> results;
  results.reserve(scores.size());
  for (const TemplateScore& s : scores) {
    results.emplace_back(decode_template(grammar, s.template_id), s.score);
  }
  const auto breakdown = component_breakdown(results, grammar);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!csv_path.empty()) {
    file = open_output(csv_path);
    out = &file;
  }
  *out << "dimension,variant,mean,std,n\n";
  for (std::size_t d = 0; d < breakdown.size(); ++d) {
    for (const ComponentGroup& group : breakdown[d]) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%zu", group.stats.mean,
                    group.stats.stddev, group.stats.n);
      *out << kComponentDimensions[d] << ","
           << csv_quote(escape_visible(group.variant)) << buf << "\n";
    }
  }
  return 0;
}

int cmd_rank_curve(const std::string& records_path,
                   const std::string& csv_path) {
  const auto curve = rank_curve(scores_from_file(records_path));
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!csv_path.empty()) {
    file = open_output(csv_path);
    out = &file;
  }
  *out << "rank,relative_score\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", curve[i]);
    *out << (i + 1) << "," << buf << "\n";
  }
  return 0;
}

int cmd_wins(const std::string& zero_shot_path,
             const std::string& few_shot_path) {
  // Inputs are one accuracy per line, paired by position across the files
  // (e.g. dataset x method cells).
  auto read_column = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      values.push_back(std::stod(line));
    }
    return values;
  };
  const WinCount result =
      count_wins(read_column(zero_shot_path), read_column(few_shot_path));
  std::cout << result.wins << "/" << result.total << " wins\n";
  return 0;
}

int cmd_export(const std::string& records_path, const std::string& csv_path) {
  const auto records = load_records(records_path);
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!csv_path.empty()) {
    file = open_output(csv_path);
    out = &file;
  }
  *out << "run_id,backend,method,demo_seed,template_id,example_id,gold,"
          "predicted,p_predicted,adjusted,error\n";
  for (const RunRecord& r : records) {
    *out << r.run_id << "," << csv_quote(r.backend_id) << "," << r.method
         << "," << r.demo_seed << "," << r.template_id << "," << r.example_id
         << "," << r.gold << "," << r.predicted << ",";
    if (r.predicted >= 0 &&
        static_cast<std::size_t>(r.predicted) < r.probs.size()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", r.probs[r.predicted]);
      *out << buf;
    }
    *out << "," << (r.adjusted ? 1 : 0) << "," << csv_quote(r.error) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Template-robustness evaluation harness for in-context "
               "learning classification"};
  app.require_subcommand(1);

  // templates
  std::string grammar_path;
  std::uint64_t sample_k = 0;
  std::uint64_t sample_seed = 0;
  bool count_only = false;
  auto* templates = app.add_subcommand(
      "templates", "Enumerate or sample templates from a grammar");
  templates->add_option("--grammar", grammar_path, "Grammar JSON file")
      ->required();
  templates->add_option("--sample", sample_k,
                        "Sample this many templates instead of enumerating");
  templates->add_option("--seed", sample_seed, "Sampling seed");
  templates->add_flag("--count", count_only, "Print only the template count");

  // render
  std::uint64_t template_id = 0;
  std::string mode_name = "direct";
  std::string demos_path;
  std::string test_text;
  int class_index = -1;
  auto* render = app.add_subcommand(
      "render", "Print the exact prompt strings for one template");
  render->add_option("--grammar", grammar_path, "Grammar JSON file")
      ->required();
  render->add_option("--template-id", template_id, "Canonical template id")
      ->required();
  render->add_option("--mode", mode_name, "direct | channel | content_free");
  render->add_option("--demos", demos_path, "Demonstration JSONL file");
  render->add_option("--text", test_text, "Test input (or cf token)")
      ->required();
  render->add_option("--class", class_index,
                     "Class index; default renders every class");

  // run
  std::string config_path, out_path = "records.jsonl", manifest_path,
              cache_path, endpoint;
  int workers = 1;
  bool ensemble_only = false;
  auto* run = app.add_subcommand("run", "Execute an evaluation run");
  run->add_option("--config", config_path, "Run config JSON")->required();
  run->add_option("--out", out_path, "Output records file (JSONL)");
  run->add_option("--manifest", manifest_path, "Manifest output file");
  run->add_option("--cache", cache_path, "Score cache file (resumable)");
  run->add_option("--workers", workers, "Worker thread count");
  run->add_option("--endpoint", endpoint,
                  "Remote endpoint URL (overrides config)");

  // ensemble: a run restricted to ensemble cells
  auto* ensemble = app.add_subcommand(
      "ensemble", "Execute only the ensemble cells of a config");
  ensemble->add_option("--config", config_path, "Run config JSON")->required();
  ensemble->add_option("--out", out_path, "Output records file (JSONL)");
  ensemble->add_option("--manifest", manifest_path, "Manifest output file");
  ensemble->add_option("--cache", cache_path, "Score cache file");
  ensemble->add_option("--workers", workers, "Worker thread count");
  ensemble->add_option("--endpoint", endpoint,
                       "Remote endpoint URL (overrides config)");

  // summarize
  std::string records_path, csv_path;
  std::vector<std::string> group_by = {"method"};
  auto* summarize_cmd =
      app.add_subcommand("summarize", "Aggregate accuracies from records");
  summarize_cmd->add_option("--records", records_path, "RunRecord JSONL file")
      ->required();
  summarize_cmd->add_option("--group-by", group_by,
                            "method | demo_seed | template_id | backend | "
                            "dataset (repeatable)");
  summarize_cmd->add_option("--csv", csv_path, "Write CSV here instead of stdout");

  // analyze-transfer
  std::vector<std::string> record_files;
  std::size_t top_k_size = 10;
  auto* transfer = app.add_subcommand(
      "analyze-transfer", "Pairwise top-k IoU and Spearman rho across runs");
  transfer->add_option("--records", record_files, "Two or more record files")
      ->required()
      ->expected(-2);
  transfer->add_option("--top-k", top_k_size, "Top set size (default 10)");
  transfer->add_option("--csv", csv_path, "Write CSV here instead of stdout");

  // analyze-components
  auto* components = app.add_subcommand(
      "analyze-components", "Per-component-variant score breakdown");
  components->add_option("--records", records_path, "RunRecord JSONL file")
      ->required();
  components->add_option("--grammar", grammar_path, "Grammar JSON file")
      ->required();
  components->add_option("--csv", csv_path, "Write CSV here instead of stdout");

  // rank-curve
  auto* curve = app.add_subcommand(
      "rank-curve", "Relative template quality sorted by accuracy");
  curve->add_option("--records", records_path, "RunRecord JSONL file")
      ->required();
  curve->add_option("--csv", csv_path, "Write CSV here instead of stdout");

  // wins
  std::string zero_shot_path, few_shot_path;
  auto* wins = app.add_subcommand(
      "wins", "Strict win count of few-shot over zero-shot accuracies");
  wins->add_option("--zero-shot", zero_shot_path,
                   "Accuracies, one per line")->required();
  wins->add_option("--few-shot", few_shot_path,
                   "Accuracies, one per line, paired by position")->required();

  // export
  auto* export_cmd =
      app.add_subcommand("export", "Flatten records to CSV");
  export_cmd->add_option("--records", records_path, "RunRecord JSONL file")
      ->required();
  export_cmd->add_option("--csv", csv_path, "Write CSV here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (templates->parsed()) {
      return cmd_templates(grammar_path, sample_k, sample_seed, count_only);
    }
    if (render->parsed()) {
      return cmd_render(grammar_path, template_id, mode_name, demos_path,
                        test_text, class_index);
    }
    if (run->parsed()) {
      return cmd_run(config_path, out_path, manifest_path, cache_path,
                     workers, endpoint, /*ensemble_only=*/false);
    }
    if (ensemble->parsed()) {
      return cmd_run(config_path, out_path, manifest_path, cache_path,
                     workers, endpoint, /*ensemble_only=*/true);
    }
    if (summarize_cmd->parsed()) {
      return cmd_summarize(records_path, group_by, csv_path);
    }
    if (transfer->parsed()) {
      return cmd_analyze_transfer(record_files, top_k_size, csv_path);
    }
    if (components->parsed()) {
      return cmd_analyze_components(records_path, grammar_path, csv_path);
    }
    if (curve->parsed()) {
      return cmd_rank_curve(records_path, csv_path);
    }
    if (wins->parsed()) {
      return cmd_wins(zero_shot_path, few_shot_path);
    }
    if (export_cmd->parsed()) {
      return cmd_export(records_path, csv_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
