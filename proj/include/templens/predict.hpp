#pragma once

// Prediction methods: Direct, Channel and Calibration. Each maps
// (backend, template, demonstrations, test input) to a normalized per-class
// probability vector. Raw continuation logprobs are turned into
// probabilities with a softmax over classes so that downstream ensembling
// has probabilities to average.

#include <string>
#include <vector>

#include "templens/backend.hpp"

namespace templens {

enum class Method { kDirect, kChannel, kCalibration, kEnsemble };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

struct LabelDistribution {
  std::vector<double> probs;
  Method method = Method::kDirect;

  /// Throws std::invalid_argument unless probs is non-empty, non-negative
  /// and sums to 1 within 1e-9.
  void validate() const;
};

/// Numerically stable softmax.
std::vector<double> softmax(const std::vector<double>& scores);

/// Smallest index attaining the maximum probability.
int classify(const LabelDistribution& dist);

/// P(y|x): one direct-mode continuation per class, softmax over the summed
/// logprobs. `example_id` is a provenance tag for meta-reading backends.
LabelDistribution predict_direct(Backend& backend, const Template& tpl,
                                 const std::vector<Demonstration>& demos,
                                 const std::string& test_text,
                                 const ComponentSet& grammar,
                                 std::int64_t example_id = -1);

/// P(x|y): one channel-mode prefix per class, shared continuation.
LabelDistribution predict_channel(Backend& backend, const Template& tpl,
                                  const std::vector<Demonstration>& demos,
                                  const std::string& test_text,
                                  const ComponentSet& grammar,
                                  std::int64_t example_id = -1);

/// Direct probabilities divided by the mean content-free probabilities and
/// renormalized. Content-free prompts carry example_id -1: they do not
/// depend on the test input, only on (template, demos, cf token).
LabelDistribution predict_calibrated(Backend& backend, const Template& tpl,
                                     const std::vector<Demonstration>& demos,
                                     const std::string& test_text,
                                     const ComponentSet& grammar,
                                     const std::vector<std::string>& cf_tokens,
                                     std::int64_t example_id = -1);

/// Dispatch by method name; kCalibration uses cf_tokens, others ignore it.
LabelDistribution predict(Method method, Backend& backend, const Template& tpl,
                          const std::vector<Demonstration>& demos,
                          const std::string& test_text,
                          const ComponentSet& grammar,
                          const std::vector<std::string>& cf_tokens,
                          std::int64_t example_id = -1);

}  // namespace templens
