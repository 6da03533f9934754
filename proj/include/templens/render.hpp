#pragma once

// Deterministic prompt rendering. Converts (template, demonstrations, test
// input) into an exact (prefix, continuation) string pair for each scoring
// mode. Strings are concatenated verbatim: no whitespace is inserted,
// stripped or normalized anywhere.

#include <cstdint>
#include <string>
#include <vector>

#include "templens/grammar.hpp"

namespace templens {

/// One labeled in-context example.
struct Demonstration {
  std::string text;
  int class_index = 0;

  bool operator==(const Demonstration&) const = default;
};

enum class Mode { kDirect, kChannel, kContentFree };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

/// Provenance tags carried alongside a prompt. Real scoring backends ignore
/// them; synthetic test backends may read them.
struct PromptMeta {
  std::int64_t template_id = -1;
  std::int64_t example_id = -1;
  int class_index = -1;
  std::uint64_t seed = 0;
};

struct RenderedPrompt {
  std::string prefix;
  std::string continuation;
  Mode mode = Mode::kDirect;
  PromptMeta meta;
};

/// Direct mode: demos as v_I(x)+intra+v_O(word), joined by inter, then the
/// test block with the output verbalizer cut at its placeholder. The
/// continuation is the class label word plus the verbalizer tail, so for a
/// fixed (template, demos, test) only the continuation varies with the class.
RenderedPrompt render_direct(const Template& tpl,
                             const std::vector<Demonstration>& demos,
                             const std::string& test_text, int class_index,
                             const ComponentSet& grammar);

/// Channel mode: block order flipped (label first, then input). The prefix
/// varies with the class; the continuation is the test text plus the input
/// verbalizer tail, identical across classes.
RenderedPrompt render_channel(const Template& tpl,
                              const std::vector<Demonstration>& demos,
                              const std::string& test_text, int class_index,
                              const ComponentSet& grammar);

/// Direct rendering with the test input replaced by a content-free token.
RenderedPrompt render_content_free(const Template& tpl,
                                   const std::vector<Demonstration>& demos,
                                   const std::string& cf_token, int class_index,
                                   const ComponentSet& grammar);

/// Splits a verbalizer pattern at its single "{}" placeholder.
struct PatternParts {
  std::string_view pre;
  std::string_view post;
};
PatternParts split_pattern(const std::string& pattern);

}  // namespace templens
