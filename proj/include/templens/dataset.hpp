#pragma once

// Labeled example ingestion. Datasets and demonstration files share one
// schema: line-delimited JSON records {"text": ..., "label": ...}. A
// content digest ties seeded draws to dataset content rather than paths.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace templens {

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Example {
  std::string text;
  int label = 0;

  bool operator==(const Example&) const = default;
};

struct Dataset {
  std::vector<Example> examples;
  std::uint64_t digest = 0;

  std::size_t size() const { return examples.size(); }
};

/// Content hash over (text, label) records, independent of file path.
std::uint64_t dataset_digest(const std::vector<Example>& examples);

/// Parses a JSONL dataset. `num_classes` > 0 enables label range checks;
/// parse and range errors carry the offending line number.
Dataset load_dataset(const std::filesystem::path& path, int num_classes = 0);
Dataset parse_dataset(const std::string& text, int num_classes = 0,
                      const std::string& origin = "<memory>");

std::string dataset_to_jsonl(const std::vector<Example>& examples);

}  // namespace templens
