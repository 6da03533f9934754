#pragma once

// Four-component prompt template grammar: input/output verbalizers plus
// intra/inter separators, with the ordered label-word list mapping class
// indices to surface forms. Templates are identified by a mixed-radix index
// over the component lists so that ids are stable across runs and
// implementations.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace templens {

/// Verbalizer placeholder marker; exactly one occurrence required.
inline constexpr std::string_view kPlaceholder = "{}";

struct GrammarError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ComponentSet {
  std::string task_name;
  std::vector<std::string> input_verbalizers;
  std::vector<std::string> output_verbalizers;
  std::vector<std::string> intra_separators;
  std::vector<std::string> inter_separators;
  std::vector<std::string> label_words;  // index = class id

  std::uint64_t template_count() const;
  int num_classes() const { return static_cast<int>(label_words.size()); }

  /// Throws GrammarError naming the offending field if any invariant fails.
  void validate() const;
};

/// One concrete template. `id` is the mixed-radix index of the component
/// positions (digit order: input verbalizer, output verbalizer, intra,
/// inter; last digit fastest).
struct Template {
  std::string input_verbalizer;
  std::string output_verbalizer;
  std::string intra_separator;
  std::string inter_separator;
  std::uint64_t id = 0;

  bool operator==(const Template&) const = default;
};

/// Parses and validates a grammar JSON document.
ComponentSet load_grammar(const std::filesystem::path& path);
ComponentSet parse_grammar(const std::string& json_text);

/// Serializes back to the grammar file schema.
std::string grammar_to_json(const ComponentSet& grammar);

/// Rebuilds the template for a canonical id.
Template decode_template(const ComponentSet& grammar, std::uint64_t id);

/// All templates in canonical id order (ids 0..count-1, no gaps).
std::vector<Template> enumerate_templates(const ComponentSet& grammar);

/// k distinct templates drawn uniformly without replacement via a
/// seeded splitmix64 Fisher-Yates shuffle of the id range.
std::vector<Template> sample_templates(const ComponentSet& grammar,
                                       std::uint64_t k, std::uint64_t seed);

/// Index of `value` in `options`; throws GrammarError if absent.
std::size_t component_index(const std::vector<std::string>& options,
                            const std::string& value, const char* field);

}  // namespace templens
