#include "templens/render.hpp"

#include <stdexcept>

namespace templens {
namespace {

void check_class(int class_index, const ComponentSet& grammar) {
  if (class_index < 0 || class_index >= grammar.num_classes()) {
    throw std::out_of_range("class index " + std::to_string(class_index) +
                            " out of range [0, " +
                            std::to_string(grammar.num_classes()) + ")");
  }
}

void check_demos(const std::vector<Demonstration>& demos,
                 const ComponentSet& grammar) {
  for (std::size_t i = 0; i < demos.size(); ++i) {
    if (demos[i].class_index < 0 ||
        demos[i].class_index >= grammar.num_classes()) {
      throw std::out_of_range("demonstration " + std::to_string(i) +
                              ": class index " +
                              std::to_string(demos[i].class_index) +
                              " out of range [0, " +
                              std::to_string(grammar.num_classes()) + ")");
    }
  }
}

void append_pattern(std::string& out, const std::string& pattern,
                    const std::string& value) {
  const PatternParts parts = split_pattern(pattern);
  out.append(parts.pre);
  out.append(value);
  out.append(parts.post);
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kDirect:
      return "direct";
    case Mode::kChannel:
      return "channel";
    case Mode::kContentFree:
      return "content_free";
  }
  return "direct";
}

Mode mode_from_string(const std::string& name) {
  if (name == "direct") return Mode::kDirect;
  if (name == "channel") return Mode::kChannel;
  if (name == "content_free") return Mode::kContentFree;
  throw std::invalid_argument("unknown render mode: " + name);
}

PatternParts split_pattern(const std::string& pattern) {
  const std::size_t pos = pattern.find(kPlaceholder);
  if (pos == std::string::npos) {
    throw GrammarError("verbalizer \"" + pattern + "\" has no placeholder");
  }
  if (pattern.find(kPlaceholder, pos + kPlaceholder.size()) !=
      std::string::npos) {
    throw GrammarError("verbalizer \"" + pattern +
                       "\" has more than one placeholder");
  }
  return PatternParts{
      std::string_view(pattern).substr(0, pos),
      std::string_view(pattern).substr(pos + kPlaceholder.size())};
}

RenderedPrompt render_direct(const Template& tpl,
                             const std::vector<Demonstration>& demos,
                             const std::string& test_text, int class_index,
                             const ComponentSet& grammar) {
  check_class(class_index, grammar);
  check_demos(demos, grammar);
  const PatternParts out_parts = split_pattern(tpl.output_verbalizer);

  RenderedPrompt result;
  result.mode = Mode::kDirect;
  result.meta.template_id = static_cast<std::int64_t>(tpl.id);
  result.meta.class_index = class_index;

  std::string& prefix = result.prefix;
  for (const Demonstration& demo : demos) {
    append_pattern(prefix, tpl.input_verbalizer, demo.text);
    prefix.append(tpl.intra_separator);
    append_pattern(prefix, tpl.output_verbalizer,
                   grammar.label_words[demo.class_index]);
    prefix.append(tpl.inter_separator);
  }
  append_pattern(prefix, tpl.input_verbalizer, test_text);
  prefix.append(tpl.intra_separator);
  prefix.append(out_parts.pre);

  result.continuation.append(grammar.label_words[class_index]);
  result.continuation.append(out_parts.post);
  return result;
}

RenderedPrompt render_channel(const Template& tpl,
                              const std::vector<Demonstration>& demos,
                              const std::string& test_text, int class_index,
                              const ComponentSet& grammar) {
  check_class(class_index, grammar);
  check_demos(demos, grammar);
  const PatternParts in_parts = split_pattern(tpl.input_verbalizer);

  RenderedPrompt result;
  result.mode = Mode::kChannel;
  result.meta.template_id = static_cast<std::int64_t>(tpl.id);
  result.meta.class_index = class_index;

  std::string& prefix = result.prefix;
  for (const Demonstration& demo : demos) {
    append_pattern(prefix, tpl.output_verbalizer,
                   grammar.label_words[demo.class_index]);
    prefix.append(tpl.intra_separator);
    append_pattern(prefix, tpl.input_verbalizer, demo.text);
    prefix.append(tpl.inter_separator);
  }
  append_pattern(prefix, tpl.output_verbalizer,
                 grammar.label_words[class_index]);
  prefix.append(tpl.intra_separator);
  prefix.append(in_parts.pre);

  result.continuation.append(test_text);
  result.continuation.append(in_parts.post);
  return result;
}

RenderedPrompt render_content_free(const Template& tpl,
                                   const std::vector<Demonstration>& demos,
                                   const std::string& cf_token,
                                   int class_index,
                                   const ComponentSet& grammar) {
  RenderedPrompt result =
      render_direct(tpl, demos, cf_token, class_index, grammar);
  result.mode = Mode::kContentFree;
  return result;
}

}  // namespace templens
