#include "templens/dataset.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "templens/hashing.hpp"

namespace templens {

std::uint64_t dataset_digest(const std::vector<Example>& examples) {
  std::uint64_t h = kFnvOffsetBasis;
  for (const Example& example : examples) {
    h = fnv1a64(example.text, h);
    h = fnv1a64_byte(0x1f, h);
    h = fnv1a64_u64(static_cast<std::uint64_t>(example.label), h);
    h = fnv1a64_byte(0x1e, h);
  }
  return mix64(h);
}

Dataset parse_dataset(const std::string& text, int num_classes,
                      const std::string& origin) {
  Dataset dataset;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DatasetError(origin + " line " + std::to_string(line_no) + ": " +
                         e.what());
    }
    if (!doc.is_object() || !doc.contains("text") || !doc.contains("label") ||
        !doc.at("text").is_string() ||
        !doc.at("label").is_number_integer()) {
      throw DatasetError(origin + " line " + std::to_string(line_no) +
                         ": expected {\"text\": string, \"label\": integer}");
    }
    Example example{doc.at("text").get<std::string>(),
                    doc.at("label").get<int>()};
    if (example.label < 0 || (num_classes > 0 && example.label >= num_classes)) {
      throw DatasetError(origin + " line " + std::to_string(line_no) +
                         ": label " + std::to_string(example.label) +
                         " out of range [0, " + std::to_string(num_classes) +
                         ")");
    }
    dataset.examples.push_back(std::move(example));
  }
  dataset.digest = dataset_digest(dataset.examples);
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& path, int num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DatasetError("cannot open dataset file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), num_classes, path.string());
}

std::string dataset_to_jsonl(const std::vector<Example>& examples) {
  std::string out;
  for (const Example& example : examples) {
    nlohmann::json doc;
    doc["text"] = example.text;
    doc["label"] = example.label;
    out += doc.dump();
    out += '\n';
  }
  return out;
}

}  // namespace templens
