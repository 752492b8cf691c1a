#pragma once

// Integrated gradients over the token-embedding input, from an all-<pad>
// baseline to the actual input along the straight-line path.

#include "logxai/encoder/model.hpp"
#include "logxai/encoder/train.hpp"
#include "logxai/encoder/vocab.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace logxai::encoder {

struct TokenAttribution {
  std::vector<std::string> tokens;
  std::vector<double> scores;
  double baseline_logit = 0.0;
  double input_logit = 0.0;
  std::size_t steps = 0;
  int target_class = 0;

  double logit_gap() const noexcept { return input_logit - baseline_logit; }

  /// |Σ scores − (input_logit − baseline_logit)|
  double completeness_gap() const noexcept {
    double sum = 0.0;
    for (double s : scores) sum += s;
    return std::abs(sum - logit_gap());
  }
};

inline void to_json(nlohmann::json& j, const TokenAttribution& a) {
  j = {{"tokens", a.tokens},
       {"scores", a.scores},
       {"baseline_logit", a.baseline_logit},
       {"input_logit", a.input_logit},
       {"steps", a.steps},
       {"target_class", a.target_class}};
}

inline void from_json(const nlohmann::json& j, TokenAttribution& a) {
  j.at("tokens").get_to(a.tokens);
  j.at("scores").get_to(a.scores);
  j.at("baseline_logit").get_to(a.baseline_logit);
  j.at("input_logit").get_to(a.input_logit);
  j.at("steps").get_to(a.steps);
  a.target_class = j.value("target_class", 0);
}

/// Midpoint Riemann sum of ∂logit[target]/∂x along baseline → input, with
/// `steps` evaluation points. Scores are summed over embedding dimensions.
inline std::vector<double> integrated_gradients_embeddings(const ModelParams& params,
                                                           const Matrix& input,
                                                           const Matrix& baseline, int target,
                                                           std::size_t steps) {
  if (steps < 1) throw ArgumentError("integrated gradients needs steps >= 1");
  if (input.rows() != baseline.rows() || input.cols() != baseline.cols())
    throw ShapeError("input and baseline embeddings differ in shape");
  const Matrix delta = input - baseline;
  Matrix grad_sum = Matrix::Zero(input.rows(), input.cols());
  Logits seed = Logits::Zero();
  seed(target) = 1.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double alpha = (static_cast<double>(k) + 0.5) / static_cast<double>(steps);
    const ForwardPass fp = forward(params, baseline + alpha * delta);
    grad_sum += backward(params, fp, seed);
  }
  grad_sum /= static_cast<double>(steps);
  const Eigen::VectorXd per_token = delta.cwiseProduct(grad_sum).rowwise().sum();
  return {per_token.data(), per_token.data() + per_token.size()};
}

/// Attributes the predicted-class logit of `text` to its tokens.
inline TokenAttribution integrated_gradients(std::string_view text, const ModelParams& params,
                                             const Vocabulary& vocab, std::size_t steps) {
  if (steps < 1) throw ArgumentError("integrated gradients needs steps >= 1");
  if (split_words(text).empty())
    throw DegenerateInputError("nothing to attribute: line is empty after normalization");
  const TokenizedText tok = tokenize(text, vocab, params.config.max_seq_len);
  const Matrix input = embed_tokens(params, tok.ids);
  const std::vector<int> pads(tok.ids.size(), pad_id);
  const Matrix baseline = embed_tokens(params, pads);

  const Logits in_logits = forward(params, input).logits;
  const Logits base_logits = forward(params, baseline).logits;
  const int target = in_logits(1) > in_logits(0) ? 1 : 0;

  TokenAttribution out;
  out.tokens = tok.tokens;
  out.steps = steps;
  out.target_class = target;
  out.input_logit = in_logits(target);
  out.baseline_logit = base_logits(target);
  out.scores = integrated_gradients_embeddings(params, input, baseline, target, steps);
  return out;
}

} // namespace logxai::encoder
