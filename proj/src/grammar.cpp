#include "templens/grammar.hpp"

#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "templens/hashing.hpp"

namespace templens {
namespace {

std::size_t count_placeholders(const std::string& pattern) {
  std::size_t n = 0;
  for (std::size_t pos = pattern.find(kPlaceholder); pos != std::string::npos;
       pos = pattern.find(kPlaceholder, pos + kPlaceholder.size())) {
    ++n;
  }
  return n;
}

void check_list(const std::vector<std::string>& items, const char* field,
                bool verbalizer) {
  if (items.empty()) {
    throw GrammarError(std::string(field) + ": list is empty");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!seen.insert(items[i]).second) {
      throw GrammarError(std::string(field) + "[" + std::to_string(i) +
                         "]: duplicate option \"" + items[i] + "\"");
    }
    if (verbalizer) {
      const std::size_t n = count_placeholders(items[i]);
      if (n != 1) {
        throw GrammarError(std::string(field) + "[" + std::to_string(i) +
                           "]: expected exactly one \"{}\" placeholder in \"" +
                           items[i] + "\", found " + std::to_string(n));
      }
    }
  }
}

std::vector<std::string> read_string_list(const nlohmann::json& doc,
                                          const char* field) {
  if (!doc.contains(field)) {
    throw GrammarError(std::string(field) + ": missing");
  }
  const auto& node = doc.at(field);
  if (!node.is_array()) {
    throw GrammarError(std::string(field) + ": expected an array of strings");
  }
  std::vector<std::string> out;
  out.reserve(node.size());
  for (const auto& item : node) {
    if (!item.is_string()) {
      throw GrammarError(std::string(field) + ": expected an array of strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

std::uint64_t ComponentSet::template_count() const {
  const std::uint64_t sizes[] = {
      input_verbalizers.size(), output_verbalizers.size(),
      intra_separators.size(), inter_separators.size()};
  std::uint64_t product = 1;
  for (std::uint64_t s : sizes) {
    if (s != 0 && product > UINT64_MAX / s) {
      throw GrammarError("template count overflows 64 bits");
    }
    product *= s;
  }
  return product;
}

void ComponentSet::validate() const {
  check_list(input_verbalizers, "input_verbalizers", /*verbalizer=*/true);
  check_list(output_verbalizers, "output_verbalizers", /*verbalizer=*/true);
  check_list(intra_separators, "intra_separators", /*verbalizer=*/false);
  check_list(inter_separators, "inter_separators", /*verbalizer=*/false);
  check_list(label_words, "label_words", /*verbalizer=*/false);
  template_count();  // overflow check
}

ComponentSet parse_grammar(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw GrammarError(std::string("malformed grammar document: ") + e.what());
  }
  if (!doc.is_object()) {
    throw GrammarError("grammar document must be a JSON object");
  }
  ComponentSet grammar;
  if (!doc.contains("task_name") || !doc.at("task_name").is_string()) {
    throw GrammarError("task_name: missing or not a string");
  }
  grammar.task_name = doc.at("task_name").get<std::string>();
  grammar.input_verbalizers = read_string_list(doc, "input_verbalizers");
  grammar.output_verbalizers = read_string_list(doc, "output_verbalizers");
  grammar.intra_separators = read_string_list(doc, "intra_separators");
  grammar.inter_separators = read_string_list(doc, "inter_separators");
  grammar.label_words = read_string_list(doc, "label_words");
  grammar.validate();
  return grammar;
}

ComponentSet load_grammar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw GrammarError("cannot open grammar file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grammar(buf.str());
}

std::string grammar_to_json(const ComponentSet& grammar) {
  nlohmann::json doc;
  doc["task_name"] = grammar.task_name;
  doc["input_verbalizers"] = grammar.input_verbalizers;
  doc["output_verbalizers"] = grammar.output_verbalizers;
  doc["intra_separators"] = grammar.intra_separators;
  doc["inter_separators"] = grammar.inter_separators;
  doc["label_words"] = grammar.label_words;
  return doc.dump(2);
}

Template decode_template(const ComponentSet& grammar, std::uint64_t id) {
  const std::uint64_t total = grammar.template_count();
  if (id >= total) {
    throw GrammarError("template id " + std::to_string(id) +
                       " out of range [0, " + std::to_string(total) + ")");
  }
  const std::uint64_t n_inter = grammar.inter_separators.size();
  const std::uint64_t n_intra = grammar.intra_separators.size();
  const std::uint64_t n_out = grammar.output_verbalizers.size();
  const std::uint64_t i_inter = id % n_inter;
  const std::uint64_t i_intra = (id / n_inter) % n_intra;
  const std::uint64_t i_out = (id / (n_inter * n_intra)) % n_out;
  const std::uint64_t i_in = id / (n_inter * n_intra * n_out);
  return Template{grammar.input_verbalizers[i_in],
                  grammar.output_verbalizers[i_out],
                  grammar.intra_separators[i_intra],
                  grammar.inter_separators[i_inter], id};
}

std::vector<Template> enumerate_templates(const ComponentSet& grammar) {
  const std::uint64_t total = grammar.template_count();
  std::vector<Template> out;
  out.reserve(total);
  for (std::uint64_t id = 0; id < total; ++id) {
    out.push_back(decode_template(grammar, id));
  }
  return out;
}

std::vector<Template> sample_templates(const ComponentSet& grammar,
                                       std::uint64_t k, std::uint64_t seed) {
  const std::uint64_t total = grammar.template_count();
  if (k == 0) {
    throw GrammarError("sample_templates: k must be positive");
  }
  if (k > total) {
    throw GrammarError("sample_templates: k=" + std::to_string(k) +
                       " exceeds template count " + std::to_string(total));
  }
  std::vector<std::uint64_t> ids(total);
  std::iota(ids.begin(), ids.end(), 0);
  SplitMix64 rng(seed);
  // Partial Fisher-Yates: after i steps the first i entries are a uniform
  // without-replacement draw in draw order.
  for (std::uint64_t i = 0; i < k; ++i) {
    const std::uint64_t j = i + rng.next_below(total - i);
    std::swap(ids[i], ids[j]);
  }
  std::vector<Template> out;
  out.reserve(k);
  for (std::uint64_t i = 0; i < k; ++i) {
    out.push_back(decode_template(grammar, ids[i]));
  }
  return out;
}

std::size_t component_index(const std::vector<std::string>& options,
                            const std::string& value, const char* field) {
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (options[i] == value) return i;
  }
  throw GrammarError(std::string(field) + ": option \"" + value +
                     "\" is not part of the grammar");
}

}  // namespace templens
