#include "templens/predict.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace templens {

std::string to_string(Method method) {
  switch (method) {
    case Method::kDirect:
      return "direct";
    case Method::kChannel:
      return "channel";
    case Method::kCalibration:
      return "calibration";
    case Method::kEnsemble:
      return "ensemble";
  }
  return "direct";
}

Method method_from_string(const std::string& name) {
  if (name == "direct") return Method::kDirect;
  if (name == "channel") return Method::kChannel;
  if (name == "calibration") return Method::kCalibration;
  if (name == "ensemble") return Method::kEnsemble;
  throw std::invalid_argument("unknown prediction method: " + name);
}

void LabelDistribution::validate() const {
  if (probs.empty()) {
    throw std::invalid_argument("label distribution is empty");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) {  // also rejects NaN
      throw std::invalid_argument("label distribution has a negative entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("label distribution sums to " +
                                std::to_string(sum) + ", expected 1");
  }
}

std::vector<double> softmax(const std::vector<double>& scores) {
  if (scores.empty()) {
    throw std::invalid_argument("softmax of an empty score vector");
  }
  const double peak = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - peak);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

int classify(const LabelDistribution& dist) {
  dist.validate();
  int best = 0;
  for (std::size_t i = 1; i < dist.probs.size(); ++i) {
    if (dist.probs[i] > dist.probs[best]) best = static_cast<int>(i);
  }
  return best;  // ties break to the lowest class index
}

namespace {

std::vector<double> class_scores(Backend& backend, const Template& tpl,
                                 const std::vector<Demonstration>& demos,
                                 const std::string& test_text,
                                 const ComponentSet& grammar, Mode mode,
                                 std::int64_t example_id) {
  const int num_classes = grammar.num_classes();
  std::vector<ScoreRequest> requests;
  requests.reserve(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    RenderedPrompt prompt;
    switch (mode) {
      case Mode::kDirect:
        prompt = render_direct(tpl, demos, test_text, c, grammar);
        break;
      case Mode::kChannel:
        prompt = render_channel(tpl, demos, test_text, c, grammar);
        break;
      case Mode::kContentFree:
        prompt = render_content_free(tpl, demos, test_text, c, grammar);
        break;
    }
    prompt.meta.example_id = example_id;
    requests.push_back(to_request(prompt));
  }
  return backend.score_batch(requests);
}

}  // namespace

LabelDistribution predict_direct(Backend& backend, const Template& tpl,
                                 const std::vector<Demonstration>& demos,
                                 const std::string& test_text,
                                 const ComponentSet& grammar,
                                 std::int64_t example_id) {
  LabelDistribution dist;
  dist.method = Method::kDirect;
  dist.probs = softmax(class_scores(backend, tpl, demos, test_text, grammar,
                                    Mode::kDirect, example_id));
  return dist;
}

LabelDistribution predict_channel(Backend& backend, const Template& tpl,
                                  const std::vector<Demonstration>& demos,
                                  const std::string& test_text,
                                  const ComponentSet& grammar,
                                  std::int64_t example_id) {
  LabelDistribution dist;
  dist.method = Method::kChannel;
  dist.probs = softmax(class_scores(backend, tpl, demos, test_text, grammar,
                                    Mode::kChannel, example_id));
  return dist;
}

LabelDistribution predict_calibrated(Backend& backend, const Template& tpl,
                                     const std::vector<Demonstration>& demos,
                                     const std::string& test_text,
                                     const ComponentSet& grammar,
                                     const std::vector<std::string>& cf_tokens,
                                     std::int64_t example_id) {
  if (cf_tokens.empty()) {
    throw std::invalid_argument("predict_calibrated: cf_tokens is empty");
  }
  const LabelDistribution direct = predict_direct(
      backend, tpl, demos, test_text, grammar, example_id);

  const int num_classes = grammar.num_classes();
  std::vector<double> cf_mean(num_classes, 0.0);
  for (const std::string& token : cf_tokens) {
    // Content-free prompts are example-independent; example_id stays -1.
    const std::vector<double> cf_probs = softmax(class_scores(
        backend, tpl, demos, token, grammar, Mode::kContentFree, -1));
    for (int c = 0; c < num_classes; ++c) cf_mean[c] += cf_probs[c];
  }
  for (double& p : cf_mean) p /= static_cast<double>(cf_tokens.size());

  LabelDistribution out;
  out.method = Method::kCalibration;
  out.probs.resize(num_classes);
  double sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    if (cf_mean[c] == 0.0) {
      throw std::domain_error(
          "predict_calibrated: content-free probability for class " +
          std::to_string(c) + " is zero");
    }
    out.probs[c] = direct.probs[c] / cf_mean[c];
    sum += out.probs[c];
  }
  for (double& p : out.probs) p /= sum;
  return out;
}

LabelDistribution predict(Method method, Backend& backend, const Template& tpl,
                          const std::vector<Demonstration>& demos,
                          const std::string& test_text,
                          const ComponentSet& grammar,
                          const std::vector<std::string>& cf_tokens,
                          std::int64_t example_id) {
  switch (method) {
    case Method::kDirect:
      return predict_direct(backend, tpl, demos, test_text, grammar,
                            example_id);
    case Method::kChannel:
      return predict_channel(backend, tpl, demos, test_text, grammar,
                             example_id);
    case Method::kCalibration:
      return predict_calibrated(backend, tpl, demos, test_text, grammar,
                                cf_tokens, example_id);
    case Method::kEnsemble:
      break;
  }
  throw std::invalid_argument("predict: ensemble is not a base method");
}

}  // namespace templens
